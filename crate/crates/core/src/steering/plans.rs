//! Plan builders: order, disorder, span, connectivity breaking and choreographies.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use super::regime::{
    disorder_threshold, odd_angle, search_k, span_threshold, steer_rise, two_block_case, KSearch, K_MARGIN,
};
use super::{AgentRule, Aim, CenterSource, ControlPlan, Frame, Phase, PhaseRule, Regime, SteeringError, TargetSet};
use crate::dynamics::{wrap_angle, Boundary, SimConfig, SwarmState, SystemKind};

/// Disjoint agent blocks, ordered by descending second coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Block index of every agent.
    pub fn group_of(&self) -> Vec<usize> {
        let n = self.blocks.iter().map(Vec::len).sum();
        let mut g = vec![0; n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                g[i] = b;
            }
        }
        g
    }
}

/// Sort agents by descending `x₂` (ties by ascending index) and cut into blocks of `sizes`.
pub fn partition_by_ordinate(state: &SwarmState, sizes: &[usize]) -> Result<Partition, SteeringError> {
    let n = state.n();
    if sizes.is_empty() || sizes.iter().sum::<usize>() != n {
        return Err(SteeringError::BadPartition(format!("sizes {sizes:?} do not sum to {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        state.positions[b][1]
            .total_cmp(&state.positions[a][1])
            .then(a.cmp(&b))
    });
    let mut blocks = Vec::with_capacity(sizes.len());
    let mut rest = &order[..];
    for &s in sizes {
        let (head, tail) = rest.split_at(s);
        blocks.push(head.to_vec());
        rest = tail;
    }
    Ok(Partition { blocks })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Choreography {
    /// Synchronised rotation of the whole flock to `target`, starting from `S¹_eps`.
    Turn { target: f64, eps: f64 },
    /// Chained quarter turns accumulating more than `total` radians.
    Vortex { total: f64, eps: f64 },
    /// Split into two synchronised groups heading `±π/2`, then re-align.
    BifurcateThenMerge { eps: f64 },
}

fn ceil(x: f64) -> usize {
    x.ceil().max(0.0) as usize
}

fn floor(x: f64) -> usize {
    x.floor().max(0.0) as usize
}

fn check_eta(eta: f64) -> Result<(), SteeringError> {
    if eta.is_finite() && eta > 0.0 && eta < TAU {
        Ok(())
    } else {
        Err(SteeringError::InvalidParameter(format!("eta must be in (0, 2π), got {eta}")))
    }
}

fn check_eps(eps: f64) -> Result<(), SteeringError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(SteeringError::InvalidParameter(format!("eps must be in (0, 1), got {eps}")))
    }
}

/// Three-case rule: push by `3η/4` while further than `η - α/2` from the aim, then land within `α/2`.
fn descent_rule(alpha: f64, eta: f64, aim: Aim, frame: Frame) -> AgentRule {
    AgentRule::Approach {
        aim,
        thr: eta - alpha / 2.0,
        delta_far: eta / 4.0,
        u_far: 3.0 * eta / 4.0,
        delta_near: alpha / 2.0,
        frame,
    }
}

fn hold(heading: f64, delta: f64, frame: Frame) -> AgentRule {
    AgentRule::Hold {
        aim: Aim::Abs(heading),
        delta,
        frame,
    }
}

/// Approach with margin `delta` everywhere and step `η - delta` while far.
fn steer(target: f64, eta: f64, delta: f64, frame: Frame) -> AgentRule {
    AgentRule::Approach {
        aim: Aim::Abs(target),
        thr: eta - delta,
        delta_far: delta,
        u_far: eta - delta,
        delta_near: delta,
        frame,
    }
}

/// Steering used by the open-boundary disorder construction: far `(η/4, 3η/4)`, near `β`.
fn open_steer(target: f64, eta: f64, beta: f64, frame: Frame) -> AgentRule {
    AgentRule::Approach {
        aim: Aim::Abs(target),
        thr: eta - beta,
        delta_far: eta / 4.0,
        u_far: 3.0 * eta / 4.0,
        delta_near: beta,
        frame,
    }
}

struct Builder {
    plan: ControlPlan,
}

impl Builder {
    fn new(name: &str, kind: SystemKind, eta: f64) -> Self {
        let mut plan = ControlPlan::empty(kind, eta);
        plan.name = name.into();
        Self { plan }
    }

    fn c(&mut self, key: &str, value: f64) -> &mut Self {
        self.plan.constants.insert(key.into(), value);
        self
    }

    fn phase(&mut self, p: Phase) -> &mut Self {
        self.plan.phases.push(p);
        self
    }

    fn unproven(&mut self, reason: impl Into<String>) -> &mut Self {
        if self.plan.regime.is_proven() {
            self.plan.regime = Regime::Unproven { reason: reason.into() };
        }
        self.plan.clamp_controls = true;
        self
    }

    fn finish(mut self, precondition: Option<TargetSet>, target: Option<TargetSet>) -> ControlPlan {
        self.plan.precondition = precondition;
        self.plan.target = target;
        self.plan
    }
}

/// Drive every heading into `[-α/2, α/2]`.
pub fn plan_order(kind: SystemKind, alpha: f64, eta: f64, cfg: &SimConfig) -> Result<ControlPlan, SteeringError> {
    check_eta(eta)?;
    if !(alpha > 0.0 && alpha < TAU) {
        return Err(SteeringError::InvalidParameter(format!("alpha must be in (0, 2π), got {alpha}")));
    }
    let target = TargetSet::OrderBox(alpha);
    let mut b = Builder::new("order", kind, eta);
    match kind {
        SystemKind::SystemII => {
            let a = alpha.min(eta);
            let t1 = ceil((TAU - a) / eta);
            b.c("alpha_eff", a).c("t1", t1 as f64);
            b.phase(Phase::new(
                "order",
                t1,
                PhaseRule::Uniform(descent_rule(a, eta, Aim::Abs(0.0), Frame::Linear)),
            ));
        }
        SystemKind::SystemI => {
            let n = cfg.n() as f64;
            let slack = eta - FRAC_PI_2 + PI / n;
            let proven = slack > 0.0;
            let eps1 = if proven {
                (slack / 3.0).min(PI / 8.0)
            } else {
                (eta / 8.0).min(PI / 8.0)
            };
            let gain = (n - 2.0) / (2.0 * (n - 1.0));
            let eps2 = (PI / 8.0).min(eta / 4.0).min(alpha / 2.0);
            let t1 = ceil((FRAC_PI_2 - eta + eps2) / (eta - 2.0 * eps2)) + 2;
            let t_rot = ceil(PI / (eta - 2.0 * eps2));
            b.c("eps1", eps1)
                .c("eps2", eps2)
                .c("gain", gain)
                .c("t1", t1 as f64)
                .c("t2", (t1 + t_rot) as f64);
            b.phase(
                Phase::new("compress", 1, PhaseRule::MidpointCompression { eps1, gain })
                    .centered(CenterSource::MeanArcMidpoint),
            );
            let near = |aim, frame| AgentRule::Approach {
                aim,
                thr: eta - eps2,
                delta_far: eps2,
                u_far: eta - eps2,
                delta_near: eps2,
                frame,
            };
            b.phase(Phase::new(
                "gather-at-center",
                t1 - 1,
                PhaseRule::Uniform(near(Aim::Center(0.0), Frame::Circular { shift: 0.0 })),
            ));
            b.phase(Phase::new(
                "rotate-to-zero",
                t_rot,
                PhaseRule::Uniform(near(Aim::Abs(0.0), Frame::CenterSide { margin: eps2 })),
            ));
            if !proven {
                b.unproven(format!("eta = {eta} <= pi/2 - pi/n = {}", FRAC_PI_2 - PI / n));
            }
        }
    }
    Ok(b.finish(None, Some(target)))
}

fn periodic_side(cfg: &SimConfig) -> Option<f64> {
    match cfg.boundary() {
        Boundary::Open => None,
        Boundary::Periodic(l) => Some(l),
    }
}

fn regime_gate(l: f64, threshold: f64, what: &str) -> Result<(), SteeringError> {
    if l > threshold {
        Ok(())
    } else {
        Err(SteeringError::RegimeViolation {
            what: what.into(),
            needed: threshold,
            got: l,
        })
    }
}

fn no_k(what: &str, l: f64) -> SteeringError {
    SteeringError::RegimeViolation {
        what: format!("no discretisation K <= 10^6 satisfies the {what} bounds"),
        needed: f64::NAN,
        got: l,
    }
}

/// System I needs `η < π/2` in the split/steer constructions; larger noise is
/// used at a reduced working level, which keeps every control admissible.
fn working_eta(kind: SystemKind, eta: f64) -> f64 {
    match kind {
        SystemKind::SystemI if eta >= FRAC_PI_2 => PI / 3.0,
        _ => eta.min(PI),
    }
}

/// Gather every agent to the horizontal line `L/2` (periodic constructions).
fn gather_phase(l: f64, eta: f64, k: f64, v: f64) -> (Phase, usize) {
    let t0 = ceil(l / (2.0 * v * (eta / k).sin()));
    let rule = AgentRule::Gather {
        line: l / 2.0,
        offset: 3.0 * eta / (2.0 * k),
        delta: eta / (2.0 * k),
    };
    (Phase::new("gather", t0, PhaseRule::Uniform(rule)), t0)
}

/// Drive the order parameter to at most `eps`, starting from `S¹_η`.
pub fn plan_disorder(kind: SystemKind, eps: f64, eta: f64, cfg: &SimConfig) -> Result<ControlPlan, SteeringError> {
    check_eta(eta)?;
    check_eps(eps)?;
    let n = cfg.n();
    let v = cfg.speed();
    let r = cfg.r_max();
    let ew = working_eta(kind, eta);
    let frame = Frame::for_system(kind);
    let mut b = Builder::new("disorder", kind, eta);
    b.c("eta_work", ew);
    match periodic_side(cfg) {
        None => {
            let beta = (ew / 2.0).min(2.0 * (eps / 2.0).asin());
            b.c("beta", beta);
            if n.is_multiple_of(2) {
                let t1 = floor(r / (2.0 * v * (ew / 4.0).sin())) + 1;
                let t_steer = ceil((PI - 2.0 * beta) / ew - 0.5).max(1);
                b.c("t1", t1 as f64).c("t2", (t1 + t_steer) as f64);
                b.phase(
                    Phase::new(
                        "split",
                        t1,
                        PhaseRule::Grouped(vec![hold(3.0 * ew / 8.0, ew / 8.0, frame), hold(-3.0 * ew / 8.0, ew / 8.0, frame)]),
                    )
                    .split(vec![n / 2, n / 2]),
                );
                b.phase(Phase::new(
                    "steer",
                    t_steer,
                    PhaseRule::Grouped(vec![open_steer(FRAC_PI_2, ew, beta, frame), open_steer(-FRAC_PI_2, ew, beta, frame)]),
                ));
            } else {
                let cn = odd_angle(n);
                let t3 = floor(r / (v * ((ew / 4.0).sin() - (ew / 8.0).sin()))) + 1;
                let t_steer = ceil((2.0 * cn - 2.0 * beta) / ew - 0.5).max(1);
                b.c("c_n", cn).c("t3", t3 as f64).c("t4", (t3 + t_steer) as f64);
                let half = (n - 1) / 2;
                b.phase(
                    Phase::new(
                        "split",
                        t3,
                        PhaseRule::Grouped(vec![
                            hold(3.0 * ew / 8.0, ew / 8.0, frame),
                            hold(0.0, ew / 8.0, frame),
                            hold(-3.0 * ew / 8.0, ew / 8.0, frame),
                        ]),
                    )
                    .split(vec![half, 1, half]),
                );
                b.phase(Phase::new(
                    "steer",
                    t_steer,
                    PhaseRule::Grouped(vec![
                        open_steer(cn, ew, beta, frame),
                        hold(0.0, beta, frame),
                        open_steer(-cn, ew, beta, frame),
                    ]),
                ));
                if cn + beta >= PI {
                    b.unproven("odd-n target band crosses the ±π cut");
                }
            }
        }
        Some(l) => {
            let threshold = disorder_threshold(eta, v, r, n, eps);
            b.c("threshold", threshold);
            regime_gate(l, threshold, "side length above the disorder threshold")?;
            let two = two_block_case(n, eps);
            let cn = odd_angle(n.max(3));
            let phase_counts = |k: f64| -> Option<(usize, usize)> {
                let drift = if two {
                    2.0 * (ew / 2.0 - ew / k).sin()
                } else {
                    (ew / 2.0 - ew / k).sin() - (ew / (2.0 * k)).sin()
                };
                if drift <= 0.0 {
                    return None;
                }
                let split = floor(r / (v * drift)) + 1;
                let steer_steps = if two {
                    ceil(((PI - ew) * k + ew) / (2.0 * (k - 1.0) * ew)).max(1)
                } else {
                    ceil(((cn - ew / 2.0) * k + ew / 2.0) / ((k - 1.0) * ew)).max(1)
                };
                Some((split, steer_steps))
            };
            let ks = search_k(4, |k| {
                let kf = k as f64;
                let (split, steer_steps) = phase_counts(kf)?;
                let excursion =
                    v * (2.0 * ew / kf).sin() + v * split as f64 * (ew / 2.0).sin() + steer_rise(v, ew, steer_steps);
                let dev = 2.0 * (ew / (4.0 * kf)).sin();
                let imbalance = if n % 2 == 1 && two { 1.0 / n as f64 } else { 0.0 };
                let ok = K_MARGIN * (r + 2.0 * excursion) < l && imbalance + K_MARGIN * dev <= eps;
                ok.then_some(KSearch {
                    k,
                    excursion,
                    phi_bound: imbalance + dev,
                })
            })
            .ok_or_else(|| no_k("disorder", l))?;
            let kf = ks.k as f64;
            let (split, steer_steps) = phase_counts(kf).expect("accepted K has valid phases");
            let d = ew / (2.0 * kf);
            let h = ew / 2.0 - d;
            let (gather, t0) = gather_phase(l, ew, kf, v);
            b.c("K", kf)
                .c("t0", t0 as f64)
                .c("excursion", ks.excursion)
                .c("phi_bound", ks.phi_bound)
                .c("split", split as f64)
                .c("steer", steer_steps as f64);
            b.phase(gather);
            if two {
                b.phase(
                    Phase::new("split", split, PhaseRule::Grouped(vec![hold(h, d, frame), hold(-h, d, frame)]))
                        .split(vec![n.div_ceil(2), n / 2]),
                );
                b.phase(Phase::new(
                    "steer",
                    steer_steps,
                    PhaseRule::Grouped(vec![steer(FRAC_PI_2, ew, d, frame), steer(-FRAC_PI_2, ew, d, frame)]),
                ));
            } else {
                let half = (n - 1) / 2;
                b.c("c_n", cn);
                b.phase(
                    Phase::new(
                        "split",
                        split,
                        PhaseRule::Grouped(vec![hold(h, d, frame), hold(0.0, d, frame), hold(-h, d, frame)]),
                    )
                    .split(vec![half, 1, half]),
                );
                b.phase(Phase::new(
                    "steer",
                    steer_steps,
                    PhaseRule::Grouped(vec![steer(cn, ew, d, frame), hold(0.0, d, frame), steer(-cn, ew, d, frame)]),
                ));
            }
        }
    }
    Ok(b.finish(Some(TargetSet::OrderBox(eta)), Some(TargetSet::Disordered(eps))))
}

/// Leading phases that bring any admissible start into `S¹_η` (System I: from `d_θ < π`).
fn normalize_phases(b: &mut Builder, kind: SystemKind, ew: f64) {
    match kind {
        SystemKind::SystemII => {
            let t = ceil((TAU - ew) / ew);
            b.c("t_order", t as f64);
            b.phase(Phase::new(
                "order",
                t,
                PhaseRule::Uniform(descent_rule(ew, ew, Aim::Abs(0.0), Frame::Linear)),
            ));
        }
        SystemKind::SystemI => {
            let t0 = (ceil(PI / ew).saturating_sub(1)).max(1);
            let t_rot = ceil(TAU / ew);
            b.c("t_order", t0 as f64).c("t_rotate", t_rot as f64);
            b.phase(
                Phase::new(
                    "order-around-center",
                    t0,
                    PhaseRule::Uniform(descent_rule(ew, ew, Aim::Center(0.0), Frame::Circular { shift: 0.0 })),
                )
                .centered(CenterSource::MeanArcMidpoint),
            );
            b.phase(Phase::new(
                "rotate-to-zero",
                t_rot,
                PhaseRule::Uniform(descent_rule(ew, ew, Aim::Abs(0.0), Frame::CenterSide { margin: ew })),
            ));
        }
    }
}

/// Drive the heading span to at least π.
pub fn plan_span_at_least_pi(kind: SystemKind, eta: f64, cfg: &SimConfig) -> Result<ControlPlan, SteeringError> {
    check_eta(eta)?;
    let n = cfg.n();
    let v = cfg.speed();
    let r = cfg.r_max();
    // the rotate-to-zero frame only holds a band of width η when η < 2π/3
    let ew = match kind {
        SystemKind::SystemI => eta.min(FRAC_PI_2),
        SystemKind::SystemII if eta >= PI => FRAC_PI_2,
        SystemKind::SystemII => eta,
    };
    let frame = Frame::for_system(kind);
    let mut b = Builder::new("span", kind, eta);
    b.c("eta_work", ew);
    let precondition = match kind {
        SystemKind::SystemI => Some(TargetSet::SpanBelow(PI)),
        SystemKind::SystemII => None,
    };
    match periodic_side(cfg) {
        None => {
            normalize_phases(&mut b, kind, ew);
            let d = ew / 8.0;
            if n >= 3 {
                let t3 = floor(r / (v * ((ew / 4.0).sin() - (ew / 8.0).sin()))) + 1;
                let t_steer = ceil(6.0 * PI / (5.0 * ew) - 0.6).max(1);
                b.c("t3", t3 as f64).c("t_steer", t_steer as f64);
                let top = (n - 1) / 2;
                let steer34 = |target: f64| AgentRule::Approach {
                    aim: Aim::Abs(target),
                    thr: 3.0 * ew / 4.0,
                    delta_far: d,
                    u_far: 3.0 * ew / 4.0,
                    delta_near: d,
                    frame,
                };
                b.phase(
                    Phase::new(
                        "split",
                        t3,
                        PhaseRule::Grouped(vec![hold(3.0 * ew / 8.0, d, frame), hold(0.0, d, frame), hold(-3.0 * ew / 8.0, d, frame)]),
                    )
                    .split(vec![top, 1, n - 1 - top]),
                );
                b.phase(Phase::new(
                    "steer",
                    t_steer,
                    PhaseRule::Grouped(vec![steer34(3.0 * PI / 4.0), hold(0.0, d, frame), steer34(-3.0 * PI / 4.0)]),
                ));
            } else {
                let t1 = floor(r / (2.0 * v * (ew / 4.0).sin())) + 1;
                let t_steer = ceil((PI - 2.0 * d) / ew - 0.5).max(1);
                b.c("t1", t1 as f64).c("t_steer", t_steer as f64);
                b.phase(
                    Phase::new(
                        "split",
                        t1,
                        PhaseRule::Grouped(vec![hold(3.0 * ew / 8.0, d, frame), hold(-3.0 * ew / 8.0, d, frame)]),
                    )
                    .split(vec![1, 1]),
                );
                b.phase(Phase::new(
                    "steer",
                    t_steer,
                    PhaseRule::Grouped(vec![open_steer(FRAC_PI_2, ew, d, frame), open_steer(-FRAC_PI_2, ew, d, frame)]),
                ));
                b.unproven("two agents reach a span of pi only when exactly antipodal");
            }
        }
        Some(l) => {
            let threshold = span_threshold(eta, v, r);
            b.c("threshold", threshold);
            regime_gate(l, threshold, "side length above the span threshold")?;
            let three = n == 3;
            let phase_counts = |k: f64| -> Option<(usize, usize)> {
                let drift = if three {
                    (ew / 2.0 - ew / k).sin() - (ew / (2.0 * k)).sin()
                } else {
                    2.0 * (ew / 2.0 - ew / k).sin()
                };
                if drift <= 0.0 {
                    return None;
                }
                let split = floor(r / (v * drift)) + 1;
                let steer_steps = ceil(((PI - ew) * k + 2.0 * ew) / (2.0 * (k - 1.0) * ew)).max(1);
                Some((split, steer_steps))
            };
            let ks = search_k(4, |k| {
                let kf = k as f64;
                let (split, steer_steps) = phase_counts(kf)?;
                let excursion =
                    v * (2.0 * ew / kf).sin() + v * split as f64 * (ew / 2.0).sin() + steer_rise(v, ew, steer_steps);
                (K_MARGIN * (r + 2.0 * excursion) < l).then_some(KSearch {
                    k,
                    excursion,
                    phi_bound: 0.0,
                })
            })
            .ok_or_else(|| no_k("span", l))?;
            let kf = ks.k as f64;
            let (split, steer_steps) = phase_counts(kf).expect("accepted K has valid phases");
            let d = ew / (2.0 * kf);
            let h = ew / 2.0 - d;
            let (gather, t0) = gather_phase(l, ew, kf, v);
            b.c("K", kf)
                .c("t0", t0 as f64)
                .c("excursion", ks.excursion)
                .c("split", split as f64)
                .c("steer", steer_steps as f64);
            normalize_phases(&mut b, kind, ew);
            b.phase(gather);
            if n >= 4 {
                let up = n.div_ceil(2);
                let down = n / 2;
                let sizes = vec![up.div_ceil(2), up / 2, down.div_ceil(2), down / 2];
                b.phase(
                    Phase::new(
                        "split",
                        split,
                        PhaseRule::Grouped(vec![hold(h, d, frame), hold(h, d, frame), hold(-h, d, frame), hold(-h, d, frame)]),
                    )
                    .split(sizes),
                );
                b.phase(Phase::new(
                    "steer",
                    steer_steps,
                    PhaseRule::Grouped(vec![
                        steer(FRAC_PI_2 + d, ew, d, frame),
                        steer(FRAC_PI_2 - d, ew, d, frame),
                        steer(-FRAC_PI_2 + d, ew, d, frame),
                        steer(-FRAC_PI_2 - d, ew, d, frame),
                    ]),
                ));
            } else if three {
                b.phase(
                    Phase::new(
                        "split",
                        split,
                        PhaseRule::Grouped(vec![hold(h, d, frame), hold(0.0, d, frame), hold(-h, d, frame)]),
                    )
                    .split(vec![1, 1, 1]),
                );
                b.phase(Phase::new(
                    "steer",
                    steer_steps,
                    PhaseRule::Grouped(vec![
                        steer(FRAC_PI_2 + d, ew, d, frame),
                        hold(0.0, d, frame),
                        steer(-FRAC_PI_2 - d, ew, d, frame),
                    ]),
                ));
                b.unproven("three-agent periodic variant: bands above pi/2 and below -pi/2 around a middle agent");
            } else {
                b.phase(
                    Phase::new("split", split, PhaseRule::Grouped(vec![hold(h, d, frame), hold(-h, d, frame)])).split(vec![1, 1]),
                );
                b.phase(Phase::new(
                    "steer",
                    steer_steps,
                    PhaseRule::Grouped(vec![steer(FRAC_PI_2, ew, d, frame), steer(-FRAC_PI_2, ew, d, frame)]),
                ));
                b.unproven("two agents reach a span of pi only when exactly antipodal");
            }
        }
    }
    Ok(b.finish(precondition, Some(TargetSet::SpanAtLeast(PI))))
}

/// Order phase used before connectivity breaking and merges.
fn order_prefix(kind: SystemKind, eta: f64, cfg: &SimConfig) -> Result<ControlPlan, SteeringError> {
    match kind {
        SystemKind::SystemII => {
            let t2 = ceil(TAU / eta - 0.25);
            let mut b = Builder::new("order", kind, eta);
            b.c("t2", t2 as f64);
            b.phase(Phase::new(
                "order",
                t2,
                PhaseRule::Uniform(descent_rule(eta, eta, Aim::Abs(0.0), Frame::Linear)),
            ));
            Ok(b.finish(None, Some(TargetSet::OrderBox(eta))))
        }
        SystemKind::SystemI => plan_order(kind, eta, eta, cfg),
    }
}

/// Keep two ordinate-sorted halves apart so that no edge joins them over a
/// designated window of `window + 1` consecutive steps.
pub fn plan_break_connectivity(
    kind: SystemKind,
    eta: f64,
    cfg: &SimConfig,
    window: usize,
) -> Result<ControlPlan, SteeringError> {
    check_eta(eta)?;
    let n = cfg.n();
    let v = cfg.speed();
    let r = cfg.r_max();
    let ew = eta.min(PI);
    let frame = Frame::for_system(kind);
    let sizes = vec![n.div_ceil(2), n / 2];
    let mut b = Builder::new("break", kind, eta);
    let (phase, lead) = match periodic_side(cfg) {
        None => {
            let t1 = floor(r / (2.0 * v * (ew / 4.0).sin())) + 1;
            b.c("T1", t1 as f64);
            let p = Phase::new(
                "split-and-hold",
                t1 + window,
                PhaseRule::Grouped(vec![hold(3.0 * ew / 8.0, ew / 8.0, frame), hold(-3.0 * ew / 8.0, ew / 8.0, frame)]),
            )
            .split(sizes);
            (p, t1)
        }
        Some(l) => {
            regime_gate(l, 2.0 * r, "side length above 2 r_max")?;
            let ks = search_k(4, |k| {
                let excursion = v * (2.0 * ew / k as f64).sin();
                (K_MARGIN * (2.0 * r + 4.0 * excursion) < l).then_some(KSearch {
                    k,
                    excursion,
                    phi_bound: 0.0,
                })
            })
            .ok_or_else(|| no_k("connectivity", l))?;
            let kf = ks.k as f64;
            let tg = ceil(l / (2.0 * v * (ew / kf).sin()));
            b.c("K", kf).c("T_gather", tg as f64);
            let gather = |line: f64| AgentRule::Gather {
                line,
                offset: 3.0 * ew / (2.0 * kf),
                delta: ew / (2.0 * kf),
            };
            let p = Phase::new(
                "gather-on-two-lines",
                tg + window,
                PhaseRule::Grouped(vec![gather(3.0 * l / 4.0), gather(l / 4.0)]),
            )
            .split(sizes);
            (p, tg)
        }
    };
    b.phase(phase);
    b.c("T_window", window as f64);
    let mut tail = b.finish(Some(TargetSet::OrderBox(eta)), None);
    tail.window = Some((lead, lead + window));
    order_prefix(kind, eta, cfg)?.then(tail)
}

/// Steps to move a band of half-width `spread/2` around 0 onto `target ± η/(2K)`.
fn turn_steps(target: f64, spread: f64, eta: f64, k: f64) -> usize {
    let dist = target.abs() + spread / 2.0 + eta / (2.0 * k) - eta;
    ceil(dist / (eta * (1.0 - 1.0 / k))) + 1
}

pub fn plan_choreography(
    kind: SystemKind,
    choreo: Choreography,
    eta: f64,
    k: usize,
    cfg: &SimConfig,
) -> Result<ControlPlan, SteeringError> {
    check_eta(eta)?;
    if k < 2 {
        return Err(SteeringError::InvalidParameter(format!("K must be >= 2, got {k}")));
    }
    let kf = k as f64;
    let d = eta / (2.0 * kf);
    let circular = Frame::Circular { shift: 0.0 };
    match choreo {
        Choreography::Turn { target, eps } => {
            check_eps(eps)?;
            let tau = wrap_angle(target);
            let mut b = Builder::new("turn", kind, eta);
            let steps = if tau.abs() <= crate::dynamics::ANGLE_TOL {
                0
            } else {
                let quarter = ceil(((2.0 * tau.abs() - eps) * kf + eta) / (2.0 * (kf - 1.0) * eta));
                turn_steps(tau, eps, eta, kf).max(quarter)
            };
            b.c("T", steps as f64).c("K", kf);
            b.phase(Phase::new(
                "turn",
                steps,
                PhaseRule::Uniform(steer(tau, eta, d, Frame::for_system(kind))),
            ));
            if kind == SystemKind::SystemII && tau.abs() + d >= PI {
                b.unproven("arithmetic means break across the ±π cut");
            }
            Ok(b.finish(
                Some(TargetSet::OrderBox(eps)),
                Some(TargetSet::HeadingBand {
                    center: tau,
                    half_width: d,
                }),
            ))
        }
        Choreography::Vortex { total, eps } => {
            check_eps(eps)?;
            if !(total.is_finite() && total > 0.0) {
                return Err(SteeringError::InvalidParameter(format!("vortex total must be > 0, got {total}")));
            }
            let legs = ceil((total + eps + eta / kf) / FRAC_PI_2).max(1);
            let mut b = Builder::new("vortex", kind, eta);
            b.c("legs", legs as f64).c("K", kf);
            for leg in 1..=legs {
                let spread = if leg == 1 { eps } else { eta / kf };
                let aim = wrap_angle(leg as f64 * FRAC_PI_2);
                b.phase(Phase::new(
                    format!("quarter-turn-{leg}"),
                    turn_steps(FRAC_PI_2, spread, eta, kf),
                    PhaseRule::Uniform(steer(aim, eta, d, circular)),
                ));
            }
            if kind == SystemKind::SystemII {
                b.unproven("arithmetic means break across the ±π cut");
            }
            Ok(b.finish(
                Some(TargetSet::OrderBox(eps)),
                Some(TargetSet::HeadingBand {
                    center: wrap_angle(legs as f64 * FRAC_PI_2),
                    half_width: d,
                }),
            ))
        }
        Choreography::BifurcateThenMerge { eps } => {
            check_eps(eps)?;
            let n = cfg.n();
            let v = cfg.speed();
            let r = cfg.r_max();
            let frame = Frame::for_system(kind);
            let ew = working_eta(kind, eta);
            let mut b = Builder::new("bifurcate-merge", kind, eta);
            let sizes = vec![n.div_ceil(2), n / 2];
            match periodic_side(cfg) {
                None => {
                    let beta = ew / (2.0 * kf);
                    let t1 = floor(r / (2.0 * v * (ew / 4.0).sin())) + 1;
                    let t_steer = ceil((PI - 2.0 * beta) / ew - 0.5).max(1);
                    b.c("beta", beta).c("t1", t1 as f64).c("bifurcated_at", (t1 + t_steer) as f64);
                    b.phase(
                        Phase::new(
                            "split",
                            t1,
                            PhaseRule::Grouped(vec![hold(3.0 * ew / 8.0, ew / 8.0, frame), hold(-3.0 * ew / 8.0, ew / 8.0, frame)]),
                        )
                        .split(sizes),
                    );
                    b.phase(Phase::new(
                        "bifurcate",
                        t_steer,
                        PhaseRule::Grouped(vec![open_steer(FRAC_PI_2, ew, beta, frame), open_steer(-FRAC_PI_2, ew, beta, frame)]),
                    ));
                }
                Some(l) => {
                    let threshold = span_threshold(eta, v, r);
                    regime_gate(l, threshold, "side length above the span threshold")?;
                    let counts = |kk: f64| {
                        let drift = 2.0 * (ew / 2.0 - ew / kk).sin();
                        let split = floor(r / (v * drift)) + 1;
                        let st = ceil(((PI - ew) * kk + ew) / (2.0 * (kk - 1.0) * ew)).max(1);
                        (split, st)
                    };
                    let ks = search_k(k, |kk| {
                        let kk_f = kk as f64;
                        let (split, st) = counts(kk_f);
                        let excursion =
                            v * (2.0 * ew / kk_f).sin() + v * split as f64 * (ew / 2.0).sin() + steer_rise(v, ew, st);
                        (K_MARGIN * (r + 2.0 * excursion) < l).then_some(KSearch {
                            k: kk,
                            excursion,
                            phi_bound: 0.0,
                        })
                    })
                    .ok_or_else(|| no_k("bifurcation", l))?;
                    let kk = ks.k as f64;
                    let (split, st) = counts(kk);
                    let dd = ew / (2.0 * kk);
                    let (gather, t0) = gather_phase(l, ew, kk, v);
                    b.c("K", kk).c("t0", t0 as f64).c("bifurcated_at", (t0 + split + st) as f64);
                    b.phase(gather);
                    b.phase(
                        Phase::new(
                            "split",
                            split,
                            PhaseRule::Grouped(vec![hold(ew / 2.0 - dd, dd, frame), hold(-ew / 2.0 + dd, dd, frame)]),
                        )
                        .split(sizes),
                    );
                    b.phase(Phase::new(
                        "bifurcate",
                        st,
                        PhaseRule::Grouped(vec![steer(FRAC_PI_2, ew, dd, frame), steer(-FRAC_PI_2, ew, dd, frame)]),
                    ));
                }
            }
            let t_merge = ceil((TAU - eta) / eta);
            b.c("t_merge", t_merge as f64);
            let merge_frame = match kind {
                SystemKind::SystemI => circular,
                SystemKind::SystemII => Frame::Linear,
            };
            b.phase(Phase::new(
                "merge",
                t_merge,
                PhaseRule::Uniform(descent_rule(eta, eta, Aim::Abs(0.0), merge_frame)),
            ));
            Ok(b.finish(Some(TargetSet::OrderBox(eps)), Some(TargetSet::OrderBox(eta))))
        }
    }
}
