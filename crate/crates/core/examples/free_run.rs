//! Free noise-driven run in the periodic box; prints order-parameter statistics.
//!
//! `cargo run --release --example free_run -- [steps] [seed]`

use spp_core::dynamics::{Boundary, SimConfig, SwarmState, SystemKind};
use spp_core::experiments::simulate;
use spp_core::noise::setup_rng;
use spp_core::verify::extract_switches_between;

fn main() {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let cfg = SimConfig::homogeneous(10, 0.01, 1.0, Boundary::Periodic(5.0))
        .unwrap()
        .with_seed(seed);
    let init = SwarmState::random(&cfg, 5.0, &mut setup_rng(seed));
    let start = std::time::Instant::now();
    let rec = simulate(&cfg, SystemKind::SystemII, init, steps, 1, false);
    let elapsed = start.elapsed();

    let phi = &rec.metrics.phi;
    let mean = phi.iter().sum::<f64>() / phi.len() as f64;
    let switches = extract_switches_between(phi, 0.85, 0.4);
    let wide = rec.metrics.d_theta.iter().filter(|&&d| d >= std::f64::consts::PI).count();
    println!("steps {steps}, seed {seed}, {elapsed:.2?}");
    println!("mean phi {mean:.4}");
    println!(
        "ordered hits {}, disordered hits {}, cycles {}",
        switches.ordered_hits().count(),
        switches.disordered_hits().count(),
        switches.cycles()
    );
    println!("steps with span >= pi: {wide}");
    println!("degenerate means: {}", rec.events.len());
}
