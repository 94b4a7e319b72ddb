//! Compose an order plan with a disorder plan (open plane and periodic box)
//! and replay it against random admissible disturbances.

use spp_core::dynamics::{Boundary, SimConfig, SystemKind};
use spp_core::metrics::order_parameter;
use spp_core::steering::{plan_disorder, plan_order, replay, UniformAdversary};
use spp_core::verify::sample_initial;

fn main() {
    let (eta, eps) = (0.6, 0.1);
    for boundary in [Boundary::Open, Boundary::Periodic(5.0)] {
        for n in [10, 7] {
            let cfg = SimConfig::homogeneous(n, 0.01, 1.0, boundary).unwrap();
            let plan = plan_order(SystemKind::SystemII, eta, eta, &cfg)
                .unwrap()
                .then(plan_disorder(SystemKind::SystemII, eps, eta, &cfg).unwrap())
                .unwrap();
            println!("{boundary:?}, n={n}: horizon {}", plan.horizon());
            for p in &plan.phases {
                println!("  {:<8} {:>5} steps  blocks {:?}", p.label, p.duration, p.partition);
            }
            for (k, v) in &plan.constants {
                println!("  {k} = {v:.6}");
            }
            let init = sample_initial(&cfg, None, 5.0, 3);
            let out = replay(&plan, &cfg, &init, &mut UniformAdversary::new(3), false).unwrap();
            println!("  final phi {:.4} (target <= {eps})", order_parameter(&out.final_state.headings));
        }
    }
}
