use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use spp_core::dynamics::{wrap_angle, Boundary, SimConfig, SystemKind};
use spp_core::metrics::{heading_span, max_pairwise_difference, order_parameter};
use spp_core::steering::{
    partition_by_ordinate, plan_disorder, plan_order, plan_span_at_least_pi, replay, EndpointAdversary,
    ScriptedAdversary,
};
use spp_core::verify::{extract_switches, sample_initial, span_bruteforce_oracle};

fn headings(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-PI..PI, 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wrap_is_idempotent(x in -100.0f64..100.0) {
        let w = wrap_angle(x);
        prop_assert!((-PI..PI).contains(&w));
        prop_assert_eq!(wrap_angle(w), w);
        prop_assert!(((x - w) / TAU - ((x - w) / TAU).round()).abs() < 1e-9);
    }

    #[test]
    fn order_parameter_in_unit_interval(h in headings(40)) {
        let phi = order_parameter(&h);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&phi));
    }

    #[test]
    fn span_is_rotation_invariant(h in headings(30), r in -PI..PI) {
        let rotated: Vec<f64> = h.iter().map(|x| wrap_angle(x + r)).collect();
        prop_assert!((heading_span(&h) - heading_span(&rotated)).abs() < 1e-9);
    }

    #[test]
    fn span_dominates_pairwise_difference(h in headings(30)) {
        prop_assert!(heading_span(&h) + 1e-12 >= max_pairwise_difference(&h));
        prop_assert!(heading_span(&h) <= span_bruteforce_oracle(&h, 1000) + 1e-12);
    }

    #[test]
    fn switches_are_stable_under_appended_quiet_data(
        phi in prop::collection::vec(0.0f64..=1.0, 1..200),
        eps in 0.05f64..0.45,
    ) {
        let rec = extract_switches(&phi, eps);
        prop_assert!(rec.times.windows(2).all(|w| w[0] < w[1]));
        for (k, &t) in rec.times.iter().enumerate() {
            if k % 2 == 0 {
                prop_assert!(phi[t] >= 1.0 - eps);
            } else {
                prop_assert!(phi[t] <= eps);
            }
        }
        // padding with values that trigger neither passage changes nothing
        let mut padded = phi.clone();
        padded.extend(std::iter::repeat_n(0.5, 10));
        prop_assert_eq!(extract_switches(&padded, eps), rec);
    }

    #[test]
    fn partition_respects_ordinates(seed in 0u64..1000, n in 2usize..12, cut in 0usize..12) {
        let cfg = SimConfig::homogeneous(n, 0.01, 1.0, Boundary::Open).unwrap();
        let s = sample_initial(&cfg, None, 5.0, seed);
        let a = cut.min(n);
        let p = partition_by_ordinate(&s, &[a, n - a]).unwrap();
        let mut all: Vec<usize> = p.blocks.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        for &i in &p.blocks[0] {
            for &j in &p.blocks[1] {
                prop_assert!(s.positions[i][1] >= s.positions[j][1]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn order_plan_system_two_robust(eta in 0.2f64..3.0, alpha in 0.05f64..6.0, n in 2usize..8, seed in 0u64..10_000) {
        let cfg = SimConfig::homogeneous(n, 0.01, 1.0, Boundary::Open).unwrap();
        let plan = plan_order(SystemKind::SystemII, alpha, eta, &cfg).unwrap();
        let init = sample_initial(&cfg, None, 5.0, seed);
        let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(seed), false).unwrap();
        prop_assert_eq!(out.clamps, 0);
        prop_assert!(out.in_target_at_horizon);
    }

    #[test]
    fn order_plan_system_one_in_proven_regime(eta in 0.3f64..3.0, n in 2usize..9, seed in 0u64..10_000) {
        let cfg = SimConfig::homogeneous(n, 0.01, 1.0, Boundary::Open).unwrap();
        let plan = plan_order(SystemKind::SystemI, 0.5, eta, &cfg).unwrap();
        prop_assume!(plan.regime.is_proven());
        let init = sample_initial(&cfg, None, 5.0, seed);
        let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(seed), false).unwrap();
        prop_assert_eq!(out.clamps, 0);
        prop_assert!(out.in_target_at_horizon);
    }

    #[test]
    fn disorder_plan_robust(eta in 0.2f64..2.5, eps in 0.02f64..0.9, n in 2usize..9, seed in 0u64..10_000, sys in any::<bool>()) {
        let kind = if sys { SystemKind::SystemI } else { SystemKind::SystemII };
        let cfg = SimConfig::homogeneous(n, 0.01, 1.0, Boundary::Open).unwrap();
        let plan = plan_disorder(kind, eps, eta, &cfg).unwrap();
        prop_assume!(plan.regime.is_proven());
        let init = sample_initial(&cfg, plan.precondition, 5.0, seed);
        let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(seed), false).unwrap();
        prop_assert_eq!(out.clamps, 0);
        prop_assert!(out.in_target_at_horizon, "phi = {}", order_parameter(&out.final_state.headings));
    }

    #[test]
    fn span_plan_robust(eta in 0.2f64..3.0, n in 3usize..9, seed in 0u64..10_000, sys in any::<bool>()) {
        let kind = if sys { SystemKind::SystemI } else { SystemKind::SystemII };
        let cfg = SimConfig::homogeneous(n, 0.01, 1.0, Boundary::Open).unwrap();
        let plan = plan_span_at_least_pi(kind, eta, &cfg).unwrap();
        let init = sample_initial(&cfg, plan.precondition, 5.0, seed);
        let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(seed), false).unwrap();
        prop_assert_eq!(out.clamps, 0);
        prop_assert!(out.in_target_at_horizon, "span = {}", heading_span(&out.final_state.headings));
    }
}

#[test]
fn exhaustive_small_order_plan() {
    // 3^(2·10) is too many; two agents over a shortened alpha = eta plan with eta = 2 has horizon 3
    let cfg = SimConfig::homogeneous(2, 0.01, 1.0, Boundary::Open).unwrap();
    let plan = plan_order(SystemKind::SystemII, 2.0, 2.0, &cfg).unwrap();
    assert_eq!(plan.horizon(), 3);
    let len = 2 * plan.horizon();
    for seed in 0..10 {
        let init = sample_initial(&cfg, None, 5.0, seed);
        for code in 0..3u32.pow(len as u32) {
            let mut c = code;
            let choices = (0..len)
                .map(|_| {
                    let d = (c % 3) as i8 - 1;
                    c /= 3;
                    d
                })
                .collect();
            let out = replay(&plan, &cfg, &init, &mut ScriptedAdversary { choices }, false).unwrap();
            assert!(out.in_target_at_horizon);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn periodic_plans_robust(eta in 0.3f64..1.5, eps in 0.05f64..0.5, n in 2usize..9, seed in 0u64..10_000, sys in any::<bool>()) {
        let kind = if sys { SystemKind::SystemI } else { SystemKind::SystemII };
        let cfg = SimConfig::homogeneous(n, 0.01, 1.0, Boundary::Periodic(8.0)).unwrap();
        let plans = [plan_disorder(kind, eps, eta, &cfg), plan_span_at_least_pi(kind, eta, &cfg)];
        for plan in plans {
            let plan = plan.unwrap();
            if !plan.regime.is_proven() {
                continue;
            }
            let init = sample_initial(&cfg, plan.precondition, 8.0, seed);
            let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(seed), false).unwrap();
            prop_assert_eq!(out.clamps, 0);
            prop_assert!(out.in_target_at_horizon, "{}: phi {} span {}", plan.name,
                order_parameter(&out.final_state.headings), heading_span(&out.final_state.headings));
        }
    }
}
