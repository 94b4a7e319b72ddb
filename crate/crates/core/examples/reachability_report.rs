//! Robust-reachability reports: exhaustive over every `{-δ, 0, +δ}` sequence
//! for a tiny swarm, randomised endpoints otherwise. Also shows that an
//! inadmissible plan is rejected during replay.

use spp_core::dynamics::{Boundary, SimConfig, SystemKind};
use spp_core::steering::{plan_order, plan_span_at_least_pi, AgentRule, ControlPlan, Phase, PhaseRule};
use spp_core::verify::{check_robust_reachability, sample_initial, AdversaryKind};

fn main() {
    let tiny = SimConfig::homogeneous(2, 0.01, 1.0, Boundary::Open).unwrap();
    let plan = plan_order(SystemKind::SystemII, 2.0, 2.0, &tiny).unwrap();
    let r = check_robust_reachability(&plan, &tiny, |s| sample_initial(&tiny, None, 5.0, s), AdversaryKind::Endpoint, 20)
        .unwrap();
    println!("order, n=2, eta=2: {}", r.summary());

    let cfg = SimConfig::homogeneous(6, 0.01, 1.0, Boundary::Open).unwrap();
    for kind in [SystemKind::SystemII, SystemKind::SystemI] {
        let plan = plan_span_at_least_pi(kind, 0.6, &cfg).unwrap();
        let pre = plan.precondition;
        let r = check_robust_reachability(&plan, &cfg, |s| sample_initial(&cfg, pre, 5.0, s), AdversaryKind::Endpoint, 50)
            .unwrap();
        println!("span >= pi, System {kind}: {}", r.summary());
    }

    let mut bad = ControlPlan::empty(SystemKind::SystemII, 0.6);
    bad.phases.push(Phase::new("push", 1, PhaseRule::Uniform(AgentRule::Fixed { delta: 0.1, u: 0.6 })));
    match check_robust_reachability(&bad, &cfg, |s| sample_initial(&cfg, None, 5.0, s), AdversaryKind::Zero, 1) {
        Ok(r) => println!("unexpected: {}", r.summary()),
        Err(e) => println!("inadmissible plan rejected: {e}"),
    }
}
