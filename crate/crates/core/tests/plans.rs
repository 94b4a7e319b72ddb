use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spp_core::dynamics::{Boundary, SimConfig, SwarmState, SystemKind};
use spp_core::metrics::{heading_span, interaction_graph, max_pairwise_difference, order_parameter};
use spp_core::steering::{
    partition_by_ordinate, plan_break_connectivity, plan_choreography, plan_disorder, plan_order,
    plan_span_at_least_pi, replay, Adversary, Choreography, ControlPlan, EndpointAdversary, SteeringError,
    UniformAdversary, ZeroAdversary,
};

fn open(n: usize) -> SimConfig {
    SimConfig::homogeneous(n, 0.01, 1.0, Boundary::Open).unwrap()
}

fn periodic(n: usize, l: f64) -> SimConfig {
    SimConfig::homogeneous(n, 0.01, 1.0, Boundary::Periodic(l)).unwrap()
}

fn random_state(cfg: &SimConfig, rng: &mut ChaCha8Rng, half_width: Option<f64>) -> SwarmState {
    let mut s = SwarmState::random(cfg, 5.0, rng);
    if let Some(h) = half_width {
        for th in &mut s.headings {
            *th = rng.random_range(-h..=h);
        }
    }
    s
}

fn run_many(plan: &ControlPlan, cfg: &SimConfig, trials: u64, half_width: Option<f64>) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = 0;
    for trial in 0..trials {
        let init = random_state(cfg, &mut rng, half_width);
        let mut adv: Box<dyn Adversary> = match trial % 3 {
            0 => Box::new(EndpointAdversary::new(trial)),
            1 => Box::new(UniformAdversary::new(trial)),
            _ => Box::new(ZeroAdversary),
        };
        let out = replay(plan, cfg, &init, adv.as_mut(), false).unwrap();
        assert_eq!(out.clamps, 0, "{}: clamped controls", plan.name);
        if !out.in_target_at_horizon {
            failures += 1;
        }
    }
    failures
}

#[test]
fn partition_examples() {
    let cfg = open(2);
    let s = SwarmState::new(&cfg, vec![[0.0, 1.0], [0.0, 5.0]], vec![0.0, 0.0]).unwrap();
    let p = partition_by_ordinate(&s, &[1, 1]).unwrap();
    assert_eq!(p.blocks, vec![vec![1], vec![0]]);

    let cfg = open(5);
    let flat = SwarmState::new(&cfg, vec![[0.0, 1.0]; 5], vec![0.0; 5]).unwrap();
    let p = partition_by_ordinate(&flat, &[2, 2, 1]).unwrap();
    assert_eq!(p.blocks, vec![vec![0, 1], vec![2, 3], vec![4]]);
    assert_eq!(p.group_of(), vec![0, 0, 1, 1, 2]);

    let ys = [0.3, 4.0, 2.5, 1.0, 3.2];
    let s = SwarmState::new(&cfg, ys.iter().map(|&y| [0.0, y]).collect(), vec![0.0; 5]).unwrap();
    let p = partition_by_ordinate(&s, &[2, 2, 1]).unwrap();
    assert_eq!(p.blocks, vec![vec![1, 4], vec![2, 3], vec![0]]);
    assert!(matches!(partition_by_ordinate(&s, &[2, 2]), Err(SteeringError::BadPartition(_))));
}

#[test]
fn order_plan_system_two() {
    let cfg = open(10);
    let plan = plan_order(SystemKind::SystemII, 0.6, 0.6, &cfg).unwrap();
    assert_eq!(plan.horizon(), 10);
    assert!(plan.regime.is_proven());
    assert_eq!(run_many(&plan, &cfg, 200, None), 0);
    assert!(plan_order(SystemKind::SystemII, 0.0, 0.6, &cfg).is_err());
}

#[test]
fn order_plan_reached_at_zero() {
    let cfg = open(4);
    let plan = plan_order(SystemKind::SystemII, 0.6, 0.6, &cfg).unwrap();
    let init = SwarmState::new(&cfg, vec![[0.0, 0.0], [3.0, 0.0], [0.0, 3.0], [3.0, 3.0]], vec![0.1, -0.1, 0.0, 0.2]).unwrap();
    let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(1), false).unwrap();
    assert_eq!(out.reached_at, Some(0));
    assert!(out.in_target_at_horizon);
}

#[test]
fn order_plan_monotone_descent() {
    let cfg = open(6);
    let plan = plan_order(SystemKind::SystemII, 0.6, 0.6, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..20 {
        let init = random_state(&cfg, &mut rng, None);
        let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(seed), true).unwrap();
        for w in out.states.windows(2) {
            let a = w[0].headings.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let b = w[1].headings.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if a > 0.6 {
                assert!(b <= a - 0.3 + 1e-9, "{a} -> {b}");
            }
        }
    }
}

#[test]
fn order_plan_system_one() {
    let cfg = open(8);
    let plan = plan_order(SystemKind::SystemI, 0.6, 1.3, &cfg).unwrap();
    assert!(plan.regime.is_proven());
    let t1 = plan.constant("t1").unwrap() as usize;
    let t2 = plan.constant("t2").unwrap() as usize;
    assert_eq!(plan.horizon(), t2);
    assert!(t1 >= 2);
    assert_eq!(run_many(&plan, &cfg, 200, None), 0);

    let low = plan_order(SystemKind::SystemI, 0.6, 0.5, &cfg).unwrap();
    assert!(!low.regime.is_proven());
}

#[test]
fn disorder_plan_open_even() {
    let cfg = open(10);
    let plan = plan_disorder(SystemKind::SystemII, 0.1, 0.6, &cfg).unwrap();
    assert_eq!(plan.phases[0].duration, 335);
    assert_eq!(plan.horizon(), 340);
    let composed = plan_order(SystemKind::SystemII, 0.6, 0.6, &cfg).unwrap().then(plan).unwrap();
    assert_eq!(composed.horizon(), 350);
    assert_eq!(run_many(&composed, &cfg, 30, None), 0);
}

#[test]
fn disorder_plan_open_odd_and_system_one() {
    let cfg = open(7);
    let plan = plan_disorder(SystemKind::SystemII, 0.1, 0.6, &cfg).unwrap();
    assert_eq!(plan.phases[0].partition.as_deref(), Some(&[3, 1, 3][..]));
    assert_eq!(run_many(&plan, &cfg, 20, Some(0.3)), 0);
    let plan = plan_disorder(SystemKind::SystemI, 0.1, 0.6, &cfg).unwrap();
    assert_eq!(run_many(&plan, &cfg, 20, Some(0.3)), 0);
    let cfg = open(6);
    let plan = plan_disorder(SystemKind::SystemI, 0.1, 2.0, &cfg).unwrap();
    assert_eq!(run_many(&plan, &cfg, 20, Some(1.0)), 0);
}

#[test]
fn disorder_split_separates_blocks() {
    let cfg = open(10);
    let plan = plan_disorder(SystemKind::SystemII, 0.1, 0.6, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let init = random_state(&cfg, &mut rng, Some(0.3));
    let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(5), true).unwrap();
    let p = partition_by_ordinate(&init, &[5, 5]).unwrap();
    let gap = |s: &SwarmState| {
        let lo = p.blocks[0].iter().map(|&i| s.positions[i][1]).fold(f64::INFINITY, f64::min);
        let hi = p.blocks[1].iter().map(|&j| s.positions[j][1]).fold(f64::NEG_INFINITY, f64::max);
        lo - hi
    };
    let step = 2.0 * 0.01 * (0.15f64).sin();
    for t in 0..335 {
        assert!(gap(&out.states[t + 1]) >= gap(&out.states[t]) + step - 1e-12);
    }
    for s in &out.states[335..] {
        let g = interaction_graph(&cfg, s);
        assert_eq!(g.cross_edges(&p.blocks[0], &p.blocks[1]), 0);
        assert_eq!(g.cross_edges(&p.blocks[1], &p.blocks[0]), 0);
    }
    assert!(order_parameter(&out.final_state.headings) <= 0.1);
}

#[test]
fn disorder_plan_periodic() {
    let cfg = periodic(10, 5.0);
    let plan = plan_disorder(SystemKind::SystemII, 0.1, 0.6, &cfg).unwrap();
    assert!(plan.constant("K").unwrap() >= 4.0);
    assert_eq!(run_many(&plan, &cfg, 10, Some(0.3)), 0);
    let small = periodic(10, 2.0);
    assert!(matches!(
        plan_disorder(SystemKind::SystemII, 0.1, 0.6, &small),
        Err(SteeringError::RegimeViolation { .. })
    ));
    assert!(plan_disorder(SystemKind::SystemII, 1.0, 0.6, &cfg).is_err());
}

#[test]
fn disorder_plan_periodic_odd() {
    let cfg = periodic(5, 5.0);
    let plan = plan_disorder(SystemKind::SystemI, 0.1, 0.6, &cfg).unwrap();
    assert_eq!(plan.phases[1].partition.as_deref(), Some(&[2, 1, 2][..]));
    assert_eq!(run_many(&plan, &cfg, 10, Some(0.3)), 0);
}

#[test]
fn span_plan_open() {
    for kind in [SystemKind::SystemII, SystemKind::SystemI] {
        let cfg = open(6);
        let plan = plan_span_at_least_pi(kind, 0.6, &cfg).unwrap();
        assert!(plan.regime.is_proven());
        let half = (kind == SystemKind::SystemI).then_some(1.5);
        assert_eq!(run_many(&plan, &cfg, 20, half), 0, "{kind}");
    }
    let cfg = open(2);
    let plan = plan_span_at_least_pi(SystemKind::SystemII, 0.6, &cfg).unwrap();
    assert!(!plan.regime.is_proven());
    assert_eq!(plan.phases.last().unwrap().partition, None);
}

#[test]
fn span_plan_periodic() {
    let cfg = periodic(8, 5.0);
    let plan = plan_span_at_least_pi(SystemKind::SystemII, 0.6, &cfg).unwrap();
    assert_eq!(run_many(&plan, &cfg, 10, None), 0);
    assert!(matches!(
        plan_span_at_least_pi(SystemKind::SystemII, 0.6, &periodic(8, 2.0)),
        Err(SteeringError::RegimeViolation { .. })
    ));
}

#[test]
fn break_connectivity_open_and_periodic() {
    let cfg = open(10);
    let plan = plan_break_connectivity(SystemKind::SystemII, 0.6, &cfg, 0).unwrap();
    let (a, b) = plan.window.unwrap();
    assert_eq!(a, b);
    let cfg = periodic(10, 5.0);
    let plan = plan_break_connectivity(SystemKind::SystemII, 0.6, &cfg, 50).unwrap();
    let (a, b) = plan.window.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for seed in 0..5 {
        let init = random_state(&cfg, &mut rng, None);
        let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(seed), true).unwrap();
        let graphs: Vec<_> = out.states.iter().map(|s| interaction_graph(&cfg, s)).collect();
        assert!(!spp_core::metrics::window_union_connected(&graphs, a, b - a).unwrap());
    }
    assert!(matches!(
        plan_break_connectivity(SystemKind::SystemII, 0.6, &periodic(10, 1.9), 10),
        Err(SteeringError::RegimeViolation { .. })
    ));
}

#[test]
fn turn_plan() {
    let cfg = open(10);
    let plan = plan_choreography(
        SystemKind::SystemII,
        Choreography::Turn { target: FRAC_PI_2, eps: 0.1 },
        0.6,
        10,
        &cfg,
    )
    .unwrap();
    assert_eq!(plan.horizon(), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..30 {
        let init = random_state(&cfg, &mut rng, Some(0.05));
        let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(seed), true).unwrap();
        for s in &out.states {
            assert!(max_pairwise_difference(&s.headings) <= 0.12 + 0.2 + 1e-12);
        }
        assert!(out.final_state.headings.iter().all(|h| (h - FRAC_PI_2).abs() <= 0.06));
    }
    let zero = plan_choreography(
        SystemKind::SystemII,
        Choreography::Turn { target: 0.0, eps: 0.1 },
        0.6,
        10,
        &cfg,
    )
    .unwrap();
    assert_eq!(zero.horizon(), 0);
}

#[test]
fn vortex_plan() {
    let cfg = open(6);
    let plan = plan_choreography(
        SystemKind::SystemI,
        Choreography::Vortex { total: 4.0 * PI, eps: 0.1 },
        0.6,
        10,
        &cfg,
    )
    .unwrap();
    assert!(plan.regime.is_proven());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for seed in 0..10 {
        let init = random_state(&cfg, &mut rng, Some(0.05));
        let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(seed), true).unwrap();
        assert!(out.in_target_at_horizon);
        for i in 0..6 {
            let turned: f64 = out
                .states
                .windows(2)
                .map(|w| spp_core::dynamics::wrap_angle(w[1].headings[i] - w[0].headings[i]))
                .sum();
            assert!(turned > 4.0 * PI, "agent {i} turned {turned}");
        }
    }
    assert!(plan_choreography(
        SystemKind::SystemI,
        Choreography::Vortex { total: 0.0, eps: 0.1 },
        0.6,
        10,
        &cfg
    )
    .is_err());
    let two = plan_choreography(
        SystemKind::SystemII,
        Choreography::Vortex { total: 1.0, eps: 0.1 },
        0.6,
        10,
        &cfg,
    )
    .unwrap();
    assert!(!two.regime.is_proven());
}

#[test]
fn bifurcate_then_merge() {
    let cfg = open(8);
    let plan = plan_choreography(
        SystemKind::SystemII,
        Choreography::BifurcateThenMerge { eps: 0.1 },
        0.6,
        10,
        &cfg,
    )
    .unwrap();
    let split_at = plan.constant("bifurcated_at").unwrap() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..10 {
        let init = random_state(&cfg, &mut rng, Some(0.05));
        let out = replay(&plan, &cfg, &init, &mut EndpointAdversary::new(seed), true).unwrap();
        let mid = &out.states[split_at];
        for (i, h) in mid.headings.iter().enumerate() {
            let target = if out.groups[i] == 0 { FRAC_PI_2 } else { -FRAC_PI_2 };
            assert!((h - target).abs() <= 0.03 + 1e-9, "agent {i}: {h}");
        }
        assert!(heading_span(&mid.headings) > 3.0);
        assert!(out.in_target_at_horizon);
    }
}

#[test]
fn plans_serialize_for_audit() {
    let cfg = periodic(10, 5.0);
    let plan = plan_disorder(SystemKind::SystemII, 0.1, 0.6, &cfg).unwrap();
    let text = plan.to_toml().unwrap();
    assert!(text.contains("gather"));
    assert!(text.contains("K"));
}
