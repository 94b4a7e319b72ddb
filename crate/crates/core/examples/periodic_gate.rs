//! Side-length thresholds of the periodic constructions and the chosen
//! discretisation `K` for a range of box sizes.

use spp_core::dynamics::{Boundary, SimConfig, SystemKind};
use spp_core::steering::{disorder_threshold, plan_disorder, plan_span_at_least_pi, span_threshold};

fn main() {
    let (eta, v, r) = (0.6, 0.01, 1.0);
    println!("span / two-block disorder threshold: {:.6}", span_threshold(eta, v, r));
    println!("odd-n disorder threshold (n=5, eps=0.1): {:.6}", disorder_threshold(eta, v, r, 5, 0.1));
    for l in [2.0, 2.05, 2.5, 3.0, 5.0, 10.0] {
        let cfg = SimConfig::homogeneous(10, v, r, Boundary::Periodic(l)).unwrap();
        let d = plan_disorder(SystemKind::SystemII, 0.1, eta, &cfg);
        let s = plan_span_at_least_pi(SystemKind::SystemII, eta, &cfg);
        let show = |p: Result<spp_core::steering::ControlPlan, _>, key: &str| match p {
            Ok(p) => format!("K={} horizon={}", p.constant(key).unwrap_or(f64::NAN), p.horizon()),
            Err(e) => format!("{e}"),
        };
        println!("L={l:>5}: disorder {} | span {}", show(d, "K"), show(s, "K"));
    }
}
