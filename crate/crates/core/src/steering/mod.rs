//! Finite-horizon control plans and their adversarial replay.
//!
//! A plan is a list of phases. Each phase lasts a fixed number of steps and maps
//! the current local means `θ̃_i(t)` (plus positions, for line-gathering rules)
//! to a margin/input pair `(δ_i, u_i)`. During replay an [`Adversary`] picks the
//! disturbance `b_i ∈ [-δ_i, δ_i]`; plans never see it.

mod plans;
mod regime;

pub use plans::{
    partition_by_ordinate, plan_break_connectivity, plan_choreography, plan_disorder, plan_order,
    plan_span_at_least_pi, Choreography, Partition,
};
pub use regime::{disorder_threshold, span_threshold, KSearch};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    advance, local_means, wrap_angle, Boundary, Control, DynamicsError, Point, SimConfig, StepInput, SwarmState,
    SystemKind, ANGLE_TOL,
};
use crate::metrics::{heading_span, order_parameter};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteeringError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("regime violation: {what} (needs {needed}, got {got})")]
    RegimeViolation { what: String, needed: f64, got: f64 },
    #[error("step {t}, agent {agent}: inadmissible control delta={delta}, u={u} for eta={eta}")]
    Admissibility {
        t: usize,
        agent: usize,
        delta: f64,
        u: f64,
        eta: f64,
    },
    #[error("bad partition: {0}")]
    BadPartition(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// State predicates used as plan targets and preconditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TargetSet {
    /// `max |θ_i| <= α/2`.
    OrderBox(f64),
    /// `φ >= 1 - ε`.
    Ordered(f64),
    /// `φ <= ε`.
    Disordered(f64),
    /// `d_θ < α`.
    SpanBelow(f64),
    /// `d_θ >= α`.
    SpanAtLeast(f64),
    /// Every heading within `half_width` of `center` (circular distance).
    HeadingBand { center: f64, half_width: f64 },
}

impl TargetSet {
    pub fn validate(&self) -> Result<(), SteeringError> {
        let ok = match *self {
            TargetSet::OrderBox(a) | TargetSet::SpanBelow(a) | TargetSet::SpanAtLeast(a) => a > 0.0 && a < 2.0 * PI,
            TargetSet::Ordered(e) | TargetSet::Disordered(e) => e > 0.0 && e < 1.0,
            TargetSet::HeadingBand { center, half_width } => center.is_finite() && half_width >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SteeringError::InvalidParameter(format!("target parameters out of range: {self:?}")))
        }
    }

    pub fn contains(&self, headings: &[f64]) -> bool {
        match *self {
            TargetSet::OrderBox(a) => headings.iter().all(|t| t.abs() <= a / 2.0 + ANGLE_TOL),
            TargetSet::Ordered(e) => order_parameter(headings) >= 1.0 - e - ANGLE_TOL,
            TargetSet::Disordered(e) => order_parameter(headings) <= e + ANGLE_TOL,
            TargetSet::SpanBelow(a) => heading_span(headings) < a - ANGLE_TOL,
            TargetSet::SpanAtLeast(a) => heading_span(headings) >= a - ANGLE_TOL,
            TargetSet::HeadingBand { center, half_width } => headings
                .iter()
                .all(|t| wrap_angle(t - center).abs() <= half_width + ANGLE_TOL),
        }
    }
}

/// How a heading offset `θ̃ - c` is measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Frame {
    /// Raw difference of angles, no wrapping (arithmetic-mean system).
    Linear,
    /// Wrapped into `[shift - π, shift + π)`.
    Circular { shift: f64 },
    /// Circular with `shift = -margin` when the phase centre is `<= 0`, else `+margin`,
    /// so the group sweeps towards the target through the side it starts on.
    CenterSide { margin: f64 },
}

impl Frame {
    pub fn for_system(kind: SystemKind) -> Self {
        match kind {
            SystemKind::SystemI => Frame::Circular { shift: 0.0 },
            SystemKind::SystemII => Frame::Linear,
        }
    }

    fn offset(&self, tilde: f64, target: f64, center: f64) -> f64 {
        let circ = |shift: f64| wrap_angle(tilde - target - shift) + shift;
        match *self {
            Frame::Linear => tilde - target,
            Frame::Circular { shift } => circ(shift),
            Frame::CenterSide { margin } => circ(if center <= 0.0 { -margin } else { margin }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Aim {
    Abs(f64),
    /// Offset from the phase centre.
    Center(f64),
}

impl Aim {
    fn resolve(&self, center: f64) -> f64 {
        match *self {
            Aim::Abs(a) => a,
            Aim::Center(o) => wrap_angle(center + o),
        }
    }
}

/// Per-agent feedback law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AgentRule {
    /// Move by `u_far` towards `aim` while further than `thr`, then land on it.
    Approach {
        aim: Aim,
        thr: f64,
        delta_far: f64,
        u_far: f64,
        delta_near: f64,
        frame: Frame,
    },
    /// `u = aim - θ̃`.
    Hold { aim: Aim, delta: f64, frame: Frame },
    /// Head `∓offset` depending on which side of the horizontal `line` the agent is.
    Gather { line: f64, offset: f64, delta: f64 },
    Fixed { delta: f64, u: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PhaseRule {
    Uniform(AgentRule),
    /// One rule per partition block.
    Grouped(Vec<AgentRule>),
    /// Single-step compression towards the centre: `u = ∓2ε₁ - g·(θ̃ - c)`.
    MidpointCompression { eps1: f64, gain: f64 },
}

/// Where a phase takes its reference heading from (evaluated at its first step).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CenterSource {
    /// Midpoint of the shortest arc covering all local means.
    MeanArcMidpoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub label: String,
    pub duration: usize,
    /// Re-split agents by descending ordinate at phase start.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub partition: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub center: Option<CenterSource>,
    pub rule: PhaseRule,
}

impl Phase {
    pub fn new(label: impl Into<String>, duration: usize, rule: PhaseRule) -> Self {
        Self {
            label: label.into(),
            duration,
            partition: None,
            center: None,
            rule,
        }
    }

    pub fn split(mut self, sizes: Vec<usize>) -> Self {
        self.partition = Some(sizes);
        self
    }

    pub fn centered(mut self, source: CenterSource) -> Self {
        self.center = Some(source);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Regime {
    Proven,
    Unproven { reason: String },
}

impl Regime {
    pub fn is_proven(&self) -> bool {
        matches!(self, Regime::Proven)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlPlan {
    pub name: String,
    pub kind: SystemKind,
    pub eta: f64,
    pub regime: Regime,
    /// Replay clamps out-of-range controls instead of failing (unproven plans only).
    pub clamp_controls: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub precondition: Option<TargetSet>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<TargetSet>,
    /// Inclusive step window `[start, end]` over which the plan makes a connectivity claim.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window: Option<(usize, usize)>,
    pub constants: BTreeMap<String, f64>,
    pub phases: Vec<Phase>,
}

impl ControlPlan {
    /// Zero-length plan; the identity for [`ControlPlan::then`].
    pub fn empty(kind: SystemKind, eta: f64) -> Self {
        Self {
            name: "empty".into(),
            kind,
            eta,
            regime: Regime::Proven,
            clamp_controls: false,
            precondition: None,
            target: None,
            window: None,
            constants: BTreeMap::new(),
            phases: Vec::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.phases.iter().map(|p| p.duration).sum()
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }

    /// Run `self`, then `next`. The result keeps `self`'s precondition and `next`'s target.
    pub fn then(self, next: ControlPlan) -> Result<ControlPlan, SteeringError> {
        if self.kind != next.kind || self.eta != next.eta {
            return Err(SteeringError::InvalidParameter(
                "composed plans must share the system and eta".into(),
            ));
        }
        if self.phases.is_empty() && self.name == "empty" {
            return Ok(next);
        }
        let offset = self.horizon();
        let mut constants = BTreeMap::new();
        for (k, v) in &self.constants {
            constants.insert(format!("{}.{k}", self.name), *v);
        }
        for (k, v) in &next.constants {
            constants.insert(format!("{}.{k}", next.name), *v);
        }
        let regime = match (&self.regime, &next.regime) {
            (Regime::Proven, Regime::Proven) => Regime::Proven,
            (Regime::Unproven { reason }, _) | (_, Regime::Unproven { reason }) => Regime::Unproven {
                reason: reason.clone(),
            },
        };
        let mut phases = self.phases;
        phases.extend(next.phases);
        Ok(ControlPlan {
            name: format!("{}+{}", self.name, next.name),
            kind: self.kind,
            eta: self.eta,
            clamp_controls: self.clamp_controls || next.clamp_controls,
            regime,
            precondition: self.precondition,
            target: next.target,
            window: next.window.map(|(a, b)| (a + offset, b + offset)).or(self.window),
            constants,
            phases,
        })
    }

    /// Human-readable audit dump.
    pub fn to_toml(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    /// Structural checks: partitions precede grouped rules and match their block count.
    pub fn validate(&self, n: usize) -> Result<(), SteeringError> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(SteeringError::InvalidParameter(format!("eta must be > 0, got {}", self.eta)));
        }
        let mut blocks: Option<usize> = None;
        for p in &self.phases {
            if let Some(sizes) = &p.partition {
                if sizes.iter().sum::<usize>() != n {
                    return Err(SteeringError::BadPartition(format!(
                        "phase '{}' sizes {sizes:?} do not sum to {n}",
                        p.label
                    )));
                }
                blocks = Some(sizes.len());
            }
            if let PhaseRule::Grouped(rules) = &p.rule {
                match blocks {
                    Some(b) if b == rules.len() => {}
                    _ => {
                        return Err(SteeringError::BadPartition(format!(
                            "phase '{}' has {} rules but partition has {blocks:?} blocks",
                            p.label,
                            rules.len()
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}

/// Chooses `b_i(t)` given the margins. Implementations must keep `|b_i| <= δ_i`.
pub trait Adversary {
    fn disturb(&mut self, t: usize, controls: &[Control], out: &mut [f64]);
    fn describe(&self) -> String;
}

pub struct ZeroAdversary;

impl Adversary for ZeroAdversary {
    fn disturb(&mut self, _t: usize, _controls: &[Control], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn describe(&self) -> String {
        "zero".into()
    }
}

/// `b_i = ±δ_i` with a fair coin per agent and step.
pub struct EndpointAdversary(ChaCha8Rng);

impl EndpointAdversary {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Adversary for EndpointAdversary {
    fn disturb(&mut self, _t: usize, controls: &[Control], out: &mut [f64]) {
        for (b, c) in out.iter_mut().zip(controls) {
            *b = if self.0.random::<bool>() { c.delta } else { -c.delta };
        }
    }
    fn describe(&self) -> String {
        "random endpoints".into()
    }
}

/// `b_i ~ U[-δ_i, δ_i]`.
pub struct UniformAdversary(ChaCha8Rng);

impl UniformAdversary {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Adversary for UniformAdversary {
    fn disturb(&mut self, _t: usize, controls: &[Control], out: &mut [f64]) {
        for (b, c) in out.iter_mut().zip(controls) {
            *b = self.0.random_range(-c.delta..=c.delta);
        }
    }
    fn describe(&self) -> String {
        "uniform".into()
    }
}

/// Fixed choices in `{-1, 0, 1}` (scaled by `δ_i`), indexed `t * n + i`; zero past the end.
pub struct ScriptedAdversary {
    pub choices: Vec<i8>,
}

impl Adversary for ScriptedAdversary {
    fn disturb(&mut self, t: usize, controls: &[Control], out: &mut [f64]) {
        let n = controls.len();
        for (i, (b, c)) in out.iter_mut().zip(controls).enumerate() {
            let s = self.choices.get(t * n + i).copied().unwrap_or(0);
            *b = f64::from(s) * c.delta;
        }
    }
    fn describe(&self) -> String {
        "scripted".into()
    }
}

/// Runtime context of a plan: current partition and reference heading.
struct PlanRun {
    group: Vec<usize>,
    center: f64,
}

fn agent_control(rule: &AgentRule, tilde: f64, pos: Point, center: f64, boundary: Boundary) -> Control {
    match *rule {
        AgentRule::Approach {
            aim,
            thr,
            delta_far,
            u_far,
            delta_near,
            frame,
        } => {
            let d = frame.offset(tilde, aim.resolve(center), center);
            if d < -thr {
                Control::new(delta_far, u_far)
            } else if d > thr {
                Control::new(delta_far, -u_far)
            } else {
                Control::new(delta_near, -d)
            }
        }
        AgentRule::Hold { aim, delta, frame } => Control::new(delta, -frame.offset(tilde, aim.resolve(center), center)),
        AgentRule::Gather { line, offset, delta } => {
            let mut disp = pos[1] - line;
            if let Boundary::Periodic(l) = boundary {
                disp = (disp + l / 2.0).rem_euclid(l) - l / 2.0;
            }
            let s = if disp >= 0.0 { -offset } else { offset };
            Control::new(delta, -wrap_angle(tilde - s))
        }
        AgentRule::Fixed { delta, u } => Control::new(delta, u),
    }
}

/// Record of one plan replay.
#[derive(Clone, Debug)]
pub struct ReplayOutcome {
    /// States `0..=horizon` (only when recording was requested).
    pub states: Vec<SwarmState>,
    pub final_state: SwarmState,
    /// First step at which the target held, if any.
    pub reached_at: Option<usize>,
    pub in_target_at_horizon: bool,
    pub clamps: usize,
    pub degenerate_means: usize,
    /// `(start step, label)` of each phase.
    pub phase_starts: Vec<(usize, String)>,
    /// Block index of every agent when the plan ended.
    pub groups: Vec<usize>,
}

/// Replay `plan` from `init`, with `adversary` picking the disturbances.
pub fn replay(
    plan: &ControlPlan,
    cfg: &SimConfig,
    init: &SwarmState,
    adversary: &mut dyn Adversary,
    record: bool,
) -> Result<ReplayOutcome, SteeringError> {
    let n = cfg.n();
    plan.validate(n)?;
    let eta = plan.eta;
    let mut state = init.clone();
    let mut run = PlanRun {
        group: vec![0; n],
        center: 0.0,
    };
    let target_holds = |s: &SwarmState| plan.target.is_none_or(|t| t.contains(&s.headings));
    let mut reached_at = target_holds(&state).then_some(0);
    let mut states = Vec::new();
    if record {
        states.push(state.clone());
    }
    let mut clamps = 0;
    let mut degenerate_means = 0;
    let mut phase_starts = Vec::new();
    let mut controls = vec![Control::new(0.0, 0.0); n];
    let mut b = vec![0.0; n];
    let mut step = 0usize;
    for phase in &plan.phases {
        phase_starts.push((step, phase.label.clone()));
        if let Some(sizes) = &phase.partition {
            let p = partition_by_ordinate(&state, sizes)?;
            run.group = p.group_of();
        }
        for k in 0..phase.duration {
            let (means, degenerate) = local_means(cfg, &state, plan.kind);
            degenerate_means += degenerate.len();
            if k == 0 {
                if let Some(CenterSource::MeanArcMidpoint) = phase.center {
                    run.center = crate::metrics::arc_midpoint(&means);
                }
            }
            for i in 0..n {
                let c = match &phase.rule {
                    PhaseRule::Uniform(r) => agent_control(r, means[i], state.positions[i], run.center, cfg.boundary()),
                    PhaseRule::Grouped(rules) => agent_control(
                        &rules[run.group[i]],
                        means[i],
                        state.positions[i],
                        run.center,
                        cfg.boundary(),
                    ),
                    PhaseRule::MidpointCompression { eps1, gain } => {
                        let d = wrap_angle(means[i] - run.center);
                        let push = if d >= 0.0 { -2.0 * eps1 } else { 2.0 * eps1 };
                        Control::new(*eps1, push - gain * d)
                    }
                };
                controls[i] = if c.is_admissible(eta) {
                    c
                } else if plan.clamp_controls {
                    clamps += 1;
                    let delta = c.delta.clamp(eta * 1e-6, eta * (1.0 - 1e-6));
                    Control::new(delta, c.u.clamp(-(eta - delta), eta - delta))
                } else {
                    return Err(SteeringError::Admissibility {
                        t: step,
                        agent: i,
                        delta: c.delta,
                        u: c.u,
                        eta,
                    });
                };
            }
            adversary.disturb(step, &controls, &mut b);
            let input = StepInput::control(&controls, &b, eta)?;
            state = advance(cfg, &state, &means, &input.values);
            step += 1;
            if reached_at.is_none() && target_holds(&state) {
                reached_at = Some(step);
            }
            if record {
                states.push(state.clone());
            }
        }
    }
    Ok(ReplayOutcome {
        in_target_at_horizon: target_holds(&state),
        states,
        final_state: state,
        reached_at,
        clamps,
        degenerate_means,
        phase_starts,
        groups: run.group,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn target_membership() {
        assert!(TargetSet::OrderBox(0.6).contains(&[0.3, -0.3, 0.0]));
        assert!(!TargetSet::OrderBox(0.6).contains(&[0.31]));
        assert!(TargetSet::Disordered(0.1).contains(&[FRAC_PI_2, -FRAC_PI_2]));
        assert!(TargetSet::Ordered(0.1).contains(&[0.1, 0.1]));
        assert!(TargetSet::SpanAtLeast(PI).contains(&[0.0, FRAC_PI_2, -FRAC_PI_2]));
        assert!(!TargetSet::SpanBelow(PI).contains(&[0.0, FRAC_PI_2, -FRAC_PI_2]));
        assert!(TargetSet::HeadingBand { center: -PI, half_width: 0.1 }.contains(&[3.1, -3.1]));
        assert!(TargetSet::OrderBox(0.0).validate().is_err());
        assert!(TargetSet::Disordered(1.0).validate().is_err());
    }

    #[test]
    fn frames() {
        assert!((Frame::Linear.offset(-3.0, FRAC_PI_2, 0.0) - (-3.0 - FRAC_PI_2)).abs() < 1e-15);
        let c = Frame::Circular { shift: 0.0 }.offset(-3.0, FRAC_PI_2, 0.0);
        assert!((c - (-3.0 - FRAC_PI_2 + 2.0 * PI)).abs() < 1e-12);
        // centre at -2 sweeps upwards: offset lies in [-π - m, π - m)
        let s = Frame::CenterSide { margin: 0.1 }.offset(3.1, 0.0, -2.0);
        assert!((s - (3.1 - 2.0 * PI)).abs() < 1e-12);
        let s = Frame::CenterSide { margin: 0.1 }.offset(-3.1, 0.0, 2.0);
        assert!((s - (-3.1 + 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn approach_rule_cases() {
        let r = AgentRule::Approach {
            aim: Aim::Abs(0.0),
            thr: 0.3,
            delta_far: 0.15,
            u_far: 0.45,
            delta_near: 0.3,
            frame: Frame::Linear,
        };
        assert_eq!(agent_control(&r, 1.0, [0.0; 2], 0.0, Boundary::Open), Control::new(0.15, -0.45));
        assert_eq!(agent_control(&r, -1.0, [0.0; 2], 0.0, Boundary::Open), Control::new(0.15, 0.45));
        assert_eq!(agent_control(&r, 0.2, [0.0; 2], 0.0, Boundary::Open), Control::new(0.3, -0.2));
    }

    #[test]
    fn gather_uses_minimum_image_side() {
        let g = AgentRule::Gather {
            line: 1.25,
            offset: 0.1,
            delta: 0.05,
        };
        // 4.9 is 1.35 below 1.25 through the wrap
        let c = agent_control(&g, 0.0, [0.0, 4.9], 0.0, Boundary::Periodic(5.0));
        assert!((c.u - 0.1).abs() < 1e-15);
        let c = agent_control(&g, 0.0, [0.0, 2.0], 0.0, Boundary::Periodic(5.0));
        assert!((c.u + 0.1).abs() < 1e-15);
    }

    #[test]
    fn adversaries_stay_within_margins() {
        let controls = vec![Control::new(0.1, 0.0), Control::new(0.2, 0.0)];
        let mut out = vec![0.0; 2];
        let mut advs: Vec<Box<dyn Adversary>> = vec![
            Box::new(ZeroAdversary),
            Box::new(EndpointAdversary::new(1)),
            Box::new(UniformAdversary::new(1)),
            Box::new(ScriptedAdversary { choices: vec![1, -1] }),
        ];
        for a in &mut advs {
            for t in 0..50 {
                a.disturb(t, &controls, &mut out);
                assert!(out.iter().zip(&controls).all(|(b, c)| b.abs() <= c.delta));
            }
        }
    }
}
