//! Drive a swarm from uniformly random headings into `[-α/2, α/2]` under a
//! worst-case disturbance, for both heading-update rules.

use spp_core::dynamics::{Boundary, SimConfig, SystemKind};
use spp_core::metrics::order_parameter;
use spp_core::steering::{plan_order, replay, EndpointAdversary};
use spp_core::verify::sample_initial;

fn main() {
    let cfg = SimConfig::homogeneous(8, 0.01, 1.0, Boundary::Open).unwrap();
    for (kind, eta) in [(SystemKind::SystemII, 0.6), (SystemKind::SystemI, 1.3)] {
        let plan = plan_order(kind, 0.6, eta, &cfg).unwrap();
        println!("System {kind}, eta {eta}: horizon {}, regime {:?}", plan.horizon(), plan.regime);
        for p in &plan.phases {
            println!("  phase {:<18} {:>3} steps", p.label, p.duration);
        }
        let init = sample_initial(&cfg, None, 5.0, 42);
        let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(42), true).unwrap();
        let max_abs = |h: &[f64]| h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (t, s) in out.states.iter().enumerate() {
            println!("  t={t:>2} max|theta|={:.4} phi={:.4}", max_abs(&s.headings), order_parameter(&s.headings));
        }
        println!("  reached at {:?}, in target at horizon: {}", out.reached_at, out.in_target_at_horizon);
    }
}
