//! Keep two halves of the swarm out of each other's range over a long window,
//! so the union of interaction graphs over that window is disconnected.

use spp_core::dynamics::{Boundary, SimConfig, SystemKind};
use spp_core::metrics::{interaction_graph, window_union_connected};
use spp_core::steering::{plan_break_connectivity, replay, EndpointAdversary};
use spp_core::verify::sample_initial;

fn main() {
    for boundary in [Boundary::Open, Boundary::Periodic(5.0)] {
        let cfg = SimConfig::homogeneous(10, 0.01, 1.0, boundary).unwrap();
        let plan = plan_break_connectivity(SystemKind::SystemII, 0.6, &cfg, 1000).unwrap();
        let (a, b) = plan.window.unwrap();
        let init = sample_initial(&cfg, None, 5.0, 11);
        let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(11), true).unwrap();
        let graphs: Vec<_> = out.states.iter().map(|s| interaction_graph(&cfg, s)).collect();
        let before = window_union_connected(&graphs, 0, a).unwrap();
        let during = window_union_connected(&graphs, a, b - a).unwrap();
        println!("{boundary:?}: horizon {}, window [{a}, {b}]", plan.horizon());
        println!("  union over [0, {a}] weakly connected: {before}");
        println!("  union over window weakly connected: {during}");
    }
}
