//! Synchronised quarter turn, then a vortex of more than two full rotations.

use std::f64::consts::{FRAC_PI_2, PI};

use spp_core::dynamics::{wrap_angle, Boundary, SimConfig, SystemKind};
use spp_core::metrics::max_pairwise_difference;
use spp_core::steering::{plan_choreography, replay, Choreography, EndpointAdversary};
use spp_core::verify::sample_initial;

fn main() {
    let cfg = SimConfig::homogeneous(10, 0.01, 1.0, Boundary::Open).unwrap();
    let turn = plan_choreography(
        SystemKind::SystemII,
        Choreography::Turn { target: FRAC_PI_2, eps: 0.1 },
        0.6,
        10,
        &cfg,
    )
    .unwrap();
    let init = sample_initial(&cfg, turn.precondition, 5.0, 1);
    let out = replay(&turn, &cfg, &init, &mut EndpointAdversary::new(1), true).unwrap();
    println!("turn to pi/2: horizon {}", turn.horizon());
    for (t, s) in out.states.iter().enumerate() {
        let mean = s.headings.iter().sum::<f64>() / s.headings.len() as f64;
        println!("  t={t} mean heading {mean:.4} spread {:.4}", max_pairwise_difference(&s.headings));
    }

    let vortex = plan_choreography(
        SystemKind::SystemI,
        Choreography::Vortex { total: 4.0 * PI, eps: 0.1 },
        0.6,
        10,
        &cfg,
    )
    .unwrap();
    let init = sample_initial(&cfg, vortex.precondition, 5.0, 2);
    let out = replay(&vortex, &cfg, &init, &mut EndpointAdversary::new(2), true).unwrap();
    let turned: f64 = out
        .states
        .windows(2)
        .map(|w| wrap_angle(w[1].headings[0] - w[0].headings[0]))
        .sum();
    let widest = out.states.iter().map(|s| max_pairwise_difference(&s.headings)).fold(0.0, f64::max);
    println!(
        "vortex: {} quarter turns over {} steps; agent 0 turned {:.3} rad (4 pi = {:.3}); widest spread {widest:.4}",
        vortex.phases.len(),
        vortex.horizon(),
        turned,
        4.0 * PI
    );
}
