//! Swarm state and one-step evolution of the two heading-update systems.
//!
//! System I replaces each heading with the weighted circular mean of the
//! neighbourhood (`atan2` of the summed unit vectors); System II uses the
//! weighted arithmetic mean of the raw angles. Both add a perturbation
//! (noise or control) and wrap the result into `[-π, π)`, then move every
//! agent one step of length `v` along its *new* heading.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::NoiseSpec;

/// Tolerance used when comparing angles in set-membership and admissibility checks.
pub const ANGLE_TOL: f64 = 1e-9;

pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("agent {agent}: weighted heading vectors cancel, circular mean is undefined")]
    DegenerateMean { agent: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("agent id {0} out of range")]
    BadAgent(usize),
    #[error("agent {agent}: inadmissible control (delta={delta}, u={u}, b={b}, eta={eta})")]
    Inadmissible {
        agent: usize,
        delta: f64,
        u: f64,
        b: f64,
        eta: f64,
    },
}

/// Map any finite angle into `[-π, π)`.
pub fn wrap_heading(x: f64) -> Result<f64, DynamicsError> {
    if !x.is_finite() {
        return Err(DynamicsError::NonFinite(x));
    }
    Ok(wrap_angle(x))
}

/// Infallible variant of [`wrap_heading`] for hot loops; the input must be finite.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    if (-PI..PI).contains(&x) {
        return x;
    }
    let r = (x + PI).rem_euclid(TAU) - PI;
    // rem_euclid may round up to TAU for inputs just below a multiple of 2π
    if r >= PI {
        -PI
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    /// Square `[0, L)²` with wrap-around.
    Periodic(f64),
}

impl Boundary {
    pub fn side(&self) -> Option<f64> {
        match self {
            Boundary::Open => None,
            Boundary::Periodic(l) => Some(*l),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    /// Circular (atan2) weighted mean: the original Vicsek rule.
    #[serde(rename = "I")]
    SystemI,
    /// Arithmetic weighted mean of raw angles, wrapped mod 2π.
    #[serde(rename = "II")]
    SystemII,
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemKind::SystemI => f.write_str("I"),
            SystemKind::SystemII => f.write_str("II"),
        }
    }
}

/// User-supplied interaction weight. Only evaluated for pairs within the
/// receiving agent's radius; must be positive on the diagonal and
/// non-negative elsewhere.
pub trait WeightFn: Send + Sync {
    fn weight(&self, i: usize, j: usize, distance: f64, radius_i: f64) -> f64;
}

impl<F> WeightFn for F
where
    F: Fn(usize, usize, f64, f64) -> f64 + Send + Sync,
{
    fn weight(&self, i: usize, j: usize, distance: f64, radius_i: f64) -> f64 {
        self(i, j, distance, radius_i)
    }
}

#[derive(Clone)]
pub enum WeightRule {
    /// `f_ij = 1` inside the radius, 0 outside.
    Indicator,
    /// Indicator weights plus an extra `gain` on a designated leader.
    Leader { leader: usize, gain: f64 },
    Custom(Arc<dyn WeightFn>),
}

impl fmt::Debug for WeightRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightRule::Indicator => f.write_str("Indicator"),
            WeightRule::Leader { leader, gain } => f
                .debug_struct("Leader")
                .field("leader", leader)
                .field("gain", gain)
                .finish(),
            WeightRule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl WeightRule {
    #[inline]
    fn eval(&self, i: usize, j: usize, distance: f64, radius_i: f64) -> f64 {
        match self {
            WeightRule::Indicator => 1.0,
            WeightRule::Leader { leader, gain } => {
                if j == *leader && i != j {
                    1.0 + gain
                } else {
                    1.0
                }
            }
            WeightRule::Custom(f) => f.weight(i, j, distance, radius_i),
        }
    }
}

/// Immutable simulation parameters.
#[derive(Clone, Debug)]
pub struct SimConfig {
    speed: f64,
    radii: Vec<f64>,
    boundary: Boundary,
    weights: WeightRule,
    noise: NoiseSpec,
    seed: u64,
}

impl SimConfig {
    pub fn new(
        speed: f64,
        radii: Vec<f64>,
        boundary: Boundary,
        weights: WeightRule,
        noise: NoiseSpec,
        seed: u64,
    ) -> Result<Self, DynamicsError> {
        if radii.len() < 2 {
            return Err(DynamicsError::InvalidConfig(format!(
                "need at least 2 agents, got {}",
                radii.len()
            )));
        }
        if !(speed.is_finite() && speed > 0.0) {
            return Err(DynamicsError::InvalidConfig(format!("speed must be > 0, got {speed}")));
        }
        if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(DynamicsError::InvalidConfig(format!("radius must be >= 0, got {r}")));
        }
        if let Boundary::Periodic(l) = boundary {
            if !(l.is_finite() && l > 0.0) {
                return Err(DynamicsError::InvalidConfig(format!("side length must be > 0, got {l}")));
            }
        }
        if let WeightRule::Leader { leader, gain } = &weights {
            if *leader >= radii.len() || !(gain.is_finite() && *gain >= 0.0) {
                return Err(DynamicsError::InvalidConfig(format!(
                    "bad leader weights (leader={leader}, gain={gain})"
                )));
            }
        }
        noise
            .validate()
            .map_err(|e| DynamicsError::InvalidConfig(e.to_string()))?;
        Ok(Self {
            speed,
            radii,
            boundary,
            weights,
            noise,
            seed,
        })
    }

    /// `n` agents sharing radius `radius`, indicator weights, `U[-0.6, 0.6]` noise, seed 0.
    pub fn homogeneous(
        n: usize,
        speed: f64,
        radius: f64,
        boundary: Boundary,
    ) -> Result<Self, DynamicsError> {
        Self::new(
            speed,
            vec![radius; n],
            boundary,
            WeightRule::Indicator,
            NoiseSpec::UniformIid { half_width: 0.6 },
            0,
        )
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Result<Self, DynamicsError> {
        noise
            .validate()
            .map_err(|e| DynamicsError::InvalidConfig(e.to_string()))?;
        self.noise = noise;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_weights(self, weights: WeightRule) -> Result<Self, DynamicsError> {
        Self::new(self.speed, self.radii, self.boundary, weights, self.noise, self.seed)
    }

    pub fn with_boundary(self, boundary: Boundary) -> Result<Self, DynamicsError> {
        Self::new(self.speed, self.radii, boundary, self.weights, self.noise, self.seed)
    }

    pub fn n(&self) -> usize {
        self.radii.len()
    }
    pub fn speed(&self) -> f64 {
        self.speed
    }
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }
    pub fn r_max(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
    pub fn weights(&self) -> &WeightRule {
        &self.weights
    }
    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Interaction weight `f_ij` in the given state (zero outside `r_i`).
    pub fn weight(&self, state: &SwarmState, i: usize, j: usize) -> f64 {
        let d = pair_distance(self, state.positions[i], state.positions[j]);
        if d <= self.radii[i] {
            self.weights.eval(i, j, d, self.radii[i])
        } else {
            0.0
        }
    }

    /// Probe the weight rule on random states: `f_ii > 0`, `f_ij >= 0` and finite.
    pub fn probe_weight_rule<R: Rng>(&self, samples: usize, rng: &mut R) -> Result<(), DynamicsError> {
        let side = self.boundary.side().unwrap_or(2.0 * self.r_max().max(1.0));
        for _ in 0..samples {
            let state = SwarmState::random(self, side, rng);
            for i in 0..self.n() {
                for j in 0..self.n() {
                    let d = pair_distance(self, state.positions[i], state.positions[j]);
                    let f = if d <= self.radii[i] {
                        self.weights.eval(i, j, d, self.radii[i])
                    } else {
                        0.0
                    };
                    let ok = f.is_finite() && f >= 0.0 && (i != j || f > 0.0);
                    if !ok {
                        return Err(DynamicsError::InvalidConfig(format!(
                            "weight rule gives f[{i}][{j}] = {f} at distance {d}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Positions and headings of all agents at step `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub t: usize,
    pub positions: Vec<Point>,
    pub headings: Vec<f64>,
}

impl SwarmState {
    /// Build a state at `t = 0`, wrapping headings into `[-π, π)` and periodic
    /// coordinates into `[0, L)`.
    pub fn new(cfg: &SimConfig, positions: Vec<Point>, headings: Vec<f64>) -> Result<Self, DynamicsError> {
        let n = cfg.n();
        for len in [positions.len(), headings.len()] {
            if len != n {
                return Err(DynamicsError::LengthMismatch { expected: n, got: len });
            }
        }
        let headings = headings
            .into_iter()
            .map(wrap_heading)
            .collect::<Result<Vec<_>, _>>()?;
        let mut positions = positions;
        for p in &mut positions {
            for c in p.iter_mut() {
                if !c.is_finite() {
                    return Err(DynamicsError::NonFinite(*c));
                }
            }
            *p = wrap_point(cfg.boundary, *p);
        }
        Ok(Self {
            t: 0,
            positions,
            headings,
        })
    }

    /// Uniform positions in `[0, side)²` and uniform headings.
    pub fn random<R: Rng>(cfg: &SimConfig, side: f64, rng: &mut R) -> Self {
        let side = cfg.boundary.side().unwrap_or(side);
        let positions = (0..cfg.n())
            .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
            .map(|p| wrap_point(cfg.boundary, p))
            .collect();
        let headings = (0..cfg.n())
            .map(|_| wrap_angle(rng.random::<f64>() * TAU - PI))
            .collect();
        Self {
            t: 0,
            positions,
            headings,
        }
    }

    pub fn n(&self) -> usize {
        self.headings.len()
    }
}

#[inline]
fn wrap_point(boundary: Boundary, p: Point) -> Point {
    match boundary {
        Boundary::Open => p,
        Boundary::Periodic(l) => [wrap_coord(p[0], l), wrap_coord(p[1], l)],
    }
}

#[inline]
fn wrap_coord(x: f64, l: f64) -> f64 {
    let r = x.rem_euclid(l);
    if r >= l {
        0.0
    } else {
        r
    }
}

/// Euclidean distance (open) or minimum-image distance (periodic).
#[inline]
pub fn pair_distance(cfg: &SimConfig, a: Point, b: Point) -> f64 {
    let mut dx = (a[0] - b[0]).abs();
    let mut dy = (a[1] - b[1]).abs();
    if let Boundary::Periodic(l) = cfg.boundary {
        dx = dx.rem_euclid(l);
        dy = dy.rem_euclid(l);
        dx = dx.min(l - dx);
        dy = dy.min(l - dy);
    }
    (dx * dx + dy * dy).sqrt()
}

/// `N_i = { j : d(X_i, X_j) <= r_i }`, sorted; always contains `i`.
pub fn neighbor_set(cfg: &SimConfig, state: &SwarmState, i: usize) -> Result<Vec<usize>, DynamicsError> {
    if i >= state.n() {
        return Err(DynamicsError::BadAgent(i));
    }
    let xi = state.positions[i];
    let ri = cfg.radii[i];
    Ok((0..state.n())
        .filter(|&j| pair_distance(cfg, xi, state.positions[j]) <= ri)
        .collect())
}

/// Weighted neighbourhood mean heading `θ̃_i` for the selected system, in `[-π, π)`.
pub fn local_mean_heading(
    cfg: &SimConfig,
    state: &SwarmState,
    i: usize,
    kind: SystemKind,
) -> Result<f64, DynamicsError> {
    if i >= state.n() {
        return Err(DynamicsError::BadAgent(i));
    }
    mean_for(cfg, state, i, kind).ok_or(DynamicsError::DegenerateMean { agent: i })
}

fn mean_for(cfg: &SimConfig, state: &SwarmState, i: usize, kind: SystemKind) -> Option<f64> {
    let xi = state.positions[i];
    let ri = cfg.radii[i];
    let mut acc_a = 0.0;
    let mut acc_b = 0.0;
    for (j, (&xj, &th)) in state.positions.iter().zip(&state.headings).enumerate() {
        let d = pair_distance(cfg, xi, xj);
        if d > ri {
            continue;
        }
        let f = cfg.weights.eval(i, j, d, ri);
        match kind {
            SystemKind::SystemI => {
                let (s, c) = th.sin_cos();
                acc_a += f * s;
                acc_b += f * c;
            }
            SystemKind::SystemII => {
                acc_a += f * th;
                acc_b += f;
            }
        }
    }
    match kind {
        SystemKind::SystemI => {
            if acc_a == 0.0 && acc_b == 0.0 {
                None
            } else {
                Some(wrap_angle(acc_a.atan2(acc_b)))
            }
        }
        SystemKind::SystemII => Some(wrap_angle(acc_a / acc_b)),
    }
}

/// All local means at once. Agents whose circular mean is undefined fall back to
/// their own current heading; their ids are returned alongside.
pub fn local_means(cfg: &SimConfig, state: &SwarmState, kind: SystemKind) -> (Vec<f64>, Vec<usize>) {
    let mut degenerate = Vec::new();
    let means = (0..state.n())
        .map(|i| {
            mean_for(cfg, state, i, kind).unwrap_or_else(|| {
                degenerate.push(i);
                state.headings[i]
            })
        })
        .collect();
    (means, degenerate)
}

/// Heading-control pair for one agent at one step: margin `δ` and input `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub delta: f64,
    pub u: f64,
}

impl Control {
    pub fn new(delta: f64, u: f64) -> Self {
        Self { delta, u }
    }

    /// `δ ∈ (0, η)` and `|u| <= η - δ` (up to [`ANGLE_TOL`]).
    pub fn is_admissible(&self, eta: f64) -> bool {
        self.delta > 0.0
            && self.delta < eta
            && self.u.is_finite()
            && self.u.abs() <= eta - self.delta + ANGLE_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Noise,
    Control { controls: Vec<Control>, disturbance: Vec<f64>, eta: f64 },
}

/// Additive heading perturbation applied after the local mean.
#[derive(Clone, Debug, PartialEq)]
pub struct StepInput {
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl StepInput {
    pub fn noise(values: Vec<f64>) -> Self {
        Self {
            values,
            provenance: Provenance::Noise,
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::noise(vec![0.0; n])
    }

    /// `u_i + b_i`, rejecting inputs that leave the noise box `[-η, η]`.
    pub fn control(controls: &[Control], disturbance: &[f64], eta: f64) -> Result<Self, DynamicsError> {
        if controls.len() != disturbance.len() {
            return Err(DynamicsError::LengthMismatch {
                expected: controls.len(),
                got: disturbance.len(),
            });
        }
        for (agent, (c, &b)) in controls.iter().zip(disturbance).enumerate() {
            if !c.is_admissible(eta) || b.is_nan() || b.abs() > c.delta + ANGLE_TOL {
                return Err(DynamicsError::Inadmissible {
                    agent,
                    delta: c.delta,
                    u: c.u,
                    b,
                    eta,
                });
            }
        }
        Ok(Self {
            values: controls.iter().zip(disturbance).map(|(c, b)| c.u + b).collect(),
            provenance: Provenance::Control {
                controls: controls.to_vec(),
                disturbance: disturbance.to_vec(),
                eta,
            },
        })
    }
}

/// Move every agent given precomputed local means and perturbations.
pub fn advance(cfg: &SimConfig, state: &SwarmState, means: &[f64], perturbation: &[f64]) -> SwarmState {
    let v = cfg.speed;
    let mut positions = Vec::with_capacity(state.n());
    let mut headings = Vec::with_capacity(state.n());
    for ((p, &m), &e) in state.positions.iter().zip(means).zip(perturbation) {
        let th = wrap_angle(m + e);
        let (s, c) = th.sin_cos();
        positions.push(wrap_point(cfg.boundary, [p[0] + v * c, p[1] + v * s]));
        headings.push(th);
    }
    SwarmState {
        t: state.t + 1,
        positions,
        headings,
    }
}

/// One synchronous update. Fails on an undefined circular mean.
pub fn step(
    cfg: &SimConfig,
    state: &SwarmState,
    kind: SystemKind,
    input: &StepInput,
) -> Result<SwarmState, DynamicsError> {
    if input.values.len() != state.n() {
        return Err(DynamicsError::LengthMismatch {
            expected: state.n(),
            got: input.values.len(),
        });
    }
    let means = (0..state.n())
        .map(|i| local_mean_heading(cfg, state, i, kind))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(advance(cfg, state, &means, &input.values))
}

/// Like [`step`], but an undefined circular mean falls back to the agent's own
/// heading. Returns the agents for which that happened.
pub fn step_lenient(
    cfg: &SimConfig,
    state: &SwarmState,
    kind: SystemKind,
    perturbation: &[f64],
) -> (SwarmState, Vec<usize>) {
    let (means, degenerate) = local_means(cfg, state, kind);
    (advance(cfg, state, &means, perturbation), degenerate)
}
