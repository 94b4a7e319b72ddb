//! Order/disorder switching in a free run: first-passage times, their survival
//! curve and an exponential envelope.
//!
//! `cargo run --release --example switching_statistics -- [steps] [seed]`

use spp_core::dynamics::{Boundary, SimConfig, SwarmState, SystemKind};
use spp_core::experiments::simulate;
use spp_core::noise::setup_rng;
use spp_core::verify::{extract_switches_between, tail_report};

fn main() {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(300_000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let cfg = SimConfig::homogeneous(10, 0.01, 1.0, Boundary::Periodic(5.0)).unwrap().with_seed(seed);
    let init = SwarmState::random(&cfg, 5.0, &mut setup_rng(seed));
    let rec = simulate(&cfg, SystemKind::SystemII, init, steps, 1, false);

    let sw = extract_switches_between(&rec.metrics.phi, 0.85, 0.4);
    println!("{steps} steps: {} complete order/disorder cycles", sw.cycles());
    let gaps = sw.gaps();
    match tail_report(&gaps) {
        Ok(t) => {
            println!("{} gaps; log-survival slope {:.3e}, r^2 {:.3}", gaps.len(), t.log_slope, t.r_squared);
            if let Some((c, block)) = t.envelope {
                println!("envelope: P(gap > t) <= {c:.3}^floor(t / {block})");
            }
            for (t, s) in t.survival.iter().step_by((t.survival.len() / 10).max(1)) {
                println!("  P(gap > {t:>6}) = {s:.4}");
            }
        }
        Err(e) => println!("{e}"),
    }
}
