//! Spread headings over at least half the circle from an arbitrary start.

use spp_core::dynamics::{Boundary, SimConfig, SystemKind};
use spp_core::metrics::heading_span;
use spp_core::steering::{plan_span_at_least_pi, replay, EndpointAdversary};
use spp_core::verify::sample_initial;

fn main() {
    for (boundary, n) in [(Boundary::Open, 6), (Boundary::Open, 2), (Boundary::Periodic(5.0), 8)] {
        for kind in [SystemKind::SystemII, SystemKind::SystemI] {
            let cfg = SimConfig::homogeneous(n, 0.01, 1.0, boundary).unwrap();
            let plan = plan_span_at_least_pi(kind, 0.6, &cfg).unwrap();
            let init = sample_initial(&cfg, plan.precondition, 5.0, 9);
            let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(9), false).unwrap();
            println!(
                "{boundary:?} n={n} System {kind}: horizon {}, final span {:.4}, regime {:?}",
                plan.horizon(),
                heading_span(&out.final_state.headings),
                plan.regime
            );
        }
    }
}
