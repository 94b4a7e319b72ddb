//! Split a flock into two synchronised groups heading north and south, then
//! merge them back into one aligned group.

use spp_core::dynamics::{Boundary, SimConfig, SystemKind};
use spp_core::metrics::{heading_span, order_parameter};
use spp_core::steering::{plan_choreography, replay, Choreography, EndpointAdversary};
use spp_core::verify::sample_initial;

fn main() {
    for boundary in [Boundary::Open, Boundary::Periodic(5.0)] {
        let cfg = SimConfig::homogeneous(8, 0.01, 1.0, boundary).unwrap();
        let plan = plan_choreography(
            SystemKind::SystemII,
            Choreography::BifurcateThenMerge { eps: 0.1 },
            0.6,
            10,
            &cfg,
        )
        .unwrap();
        let at = plan.constant("bifurcated_at").unwrap() as usize;
        let init = sample_initial(&cfg, plan.precondition, 5.0, 5);
        let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(5), true).unwrap();
        println!("{boundary:?}: horizon {}", plan.horizon());
        for (t, label) in &out.phase_starts {
            let s = &out.states[*t];
            println!("  t={t:>5} {label:<10} phi={:.3} span={:.3}", order_parameter(&s.headings), heading_span(&s.headings));
        }
        let mid = &out.states[at];
        println!("  split complete at t={at}: phi={:.3} span={:.3}", order_parameter(&mid.headings), heading_span(&mid.headings));
        let end = &out.final_state;
        println!("  merged at t={}: phi={:.3}", end.t, order_parameter(&end.headings));
    }
}
