//! Configured runs: free evolution, plan replay, reachability checks and figure presets.
//!
//! Configuration is TOML. A minimal free run:
//!
//! ```toml
//! system = "II"
//! n = 10
//! speed = 0.01
//! boundary = { periodic = 5.0 }
//! radii = { kind = "fixed", value = 1.0 }
//! noise = { kind = "uniform", half_width = 0.6 }
//! steps = 100000
//! seeds = [1, 2, 3]
//! mode = { kind = "free" }
//! ```
//!
//! See the crate README for the full grammar.

pub mod csv;
pub mod figures;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{step_lenient, Boundary, DynamicsError, SimConfig, SwarmState, SystemKind, WeightRule};
use crate::metrics::MetricSeries;
use crate::noise::{setup_rng, NoiseSource, NoiseSpec};
use crate::steering::{
    plan_break_connectivity, plan_choreography, plan_disorder, plan_order, plan_span_at_least_pi, replay,
    Choreography, ControlPlan, SteeringError,
};
use crate::verify::{check_robust_reachability, sample_initial, AdversaryKind, ReachabilityReport, VerifyError};

/// Environment variable overriding the configured output directory.
pub const OUT_DIR_ENV: &str = "SPP_OUT_DIR";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed CSV: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error(transparent)]
    Steering(#[from] SteeringError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 1 for regime, precondition or admissibility violations;
    /// 2 for I/O, CSV and configuration problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Steering(SteeringError::InvalidParameter(_))
            | ExperimentError::Verify(VerifyError::InvalidParameter(_) | VerifyError::Insufficient { .. })
            | ExperimentError::Dynamics(_)
            | ExperimentError::Io { .. }
            | ExperimentError::Csv { .. }
            | ExperimentError::Config(_) => 2,
            ExperimentError::Steering(_) | ExperimentError::Verify(_) | ExperimentError::Precondition(_) => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiiSpec {
    Fixed { value: f64 },
    /// Drawn once per seed from `U[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    List { values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanSpec {
    Order { eta: f64, alpha: f64 },
    /// `compose_order` prefixes an order plan so any start is admissible.
    Disorder {
        eta: f64,
        eps: f64,
        #[serde(default)]
        compose_order: bool,
    },
    Span { eta: f64 },
    BreakConnectivity { eta: f64, window: usize },
    Turn { eta: f64, target: f64, eps: f64, k: usize },
    Vortex { eta: f64, total: f64, eps: f64, k: usize },
    BifurcateThenMerge { eta: f64, eps: f64, k: usize },
}

impl PlanSpec {
    pub fn build(&self, kind: SystemKind, cfg: &SimConfig) -> Result<ControlPlan, SteeringError> {
        match *self {
            PlanSpec::Order { eta, alpha } => plan_order(kind, alpha, eta, cfg),
            PlanSpec::Disorder { eta, eps, compose_order } => {
                let d = plan_disorder(kind, eps, eta, cfg)?;
                if compose_order {
                    plan_order(kind, eta, eta, cfg)?.then(d)
                } else {
                    Ok(d)
                }
            }
            PlanSpec::Span { eta } => plan_span_at_least_pi(kind, eta, cfg),
            PlanSpec::BreakConnectivity { eta, window } => plan_break_connectivity(kind, eta, cfg, window),
            PlanSpec::Turn { eta, target, eps, k } => plan_choreography(kind, Choreography::Turn { target, eps }, eta, k, cfg),
            PlanSpec::Vortex { eta, total, eps, k } => plan_choreography(kind, Choreography::Vortex { total, eps }, eta, k, cfg),
            PlanSpec::BifurcateThenMerge { eta, eps, k } => {
                plan_choreography(kind, Choreography::BifurcateThenMerge { eps }, eta, k, cfg)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    Free,
    Steered {
        plan: PlanSpec,
        adversary: AdversaryKind,
        /// Draw initial headings inside the plan's precondition instead of uniformly.
        #[serde(default = "yes")]
        sample_precondition: bool,
    },
    Verify {
        plan: PlanSpec,
        adversary: AdversaryKind,
        trials: usize,
    },
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

fn five() -> f64 {
    5.0
}

fn out_default() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default = "out_default")]
    pub dir: PathBuf,
    /// Also write `t,agent,x1,x2,theta` rows at every sampled step.
    #[serde(default)]
    pub states: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: out_default(),
            states: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemKind,
    pub n: usize,
    pub speed: f64,
    pub boundary: Boundary,
    pub radii: RadiiSpec,
    pub noise: NoiseSpec,
    /// Side of the square initial positions are drawn from (open boundary).
    #[serde(default = "five")]
    pub init_side: f64,
    pub steps: usize,
    #[serde(default = "one")]
    pub stride: usize,
    pub seeds: Vec<u64>,
    pub mode: Mode,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ExperimentError> {
        toml::to_string(self).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.into()));
        if self.steps == 0 {
            return bad("steps must be >= 1");
        }
        if self.stride == 0 {
            return bad("stride must be >= 1");
        }
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty");
        }
        if let RadiiSpec::List { values } = &self.radii {
            if values.len() != self.n {
                return bad("radii list length must equal n");
            }
        }
        if let RadiiSpec::Uniform { lo, hi } = self.radii {
            if !(0.0 <= lo && lo < hi) {
                return bad("uniform radii need 0 <= lo < hi");
            }
        }
        self.sim_config(self.seeds[0])?;
        Ok(())
    }

    /// Simulation parameters for one seed (random radii are drawn here).
    pub fn sim_config(&self, seed: u64) -> Result<SimConfig, ExperimentError> {
        let radii = match &self.radii {
            RadiiSpec::Fixed { value } => vec![*value; self.n],
            RadiiSpec::Uniform { lo, hi } => {
                let mut rng = setup_rng(seed);
                (0..self.n).map(|_| rng.random_range(*lo..=*hi)).collect()
            }
            RadiiSpec::List { values } => values.clone(),
        };
        Ok(SimConfig::new(self.speed, radii, self.boundary, WeightRule::Indicator, self.noise, seed)?)
    }

    /// Initial state for `seed`; drawn after the radii from the same setup stream.
    pub fn initial_state(&self, cfg: &SimConfig, seed: u64) -> SwarmState {
        let mut rng = setup_rng(seed);
        if let RadiiSpec::Uniform { lo, hi } = self.radii {
            for _ in 0..self.n {
                let _: f64 = rng.random_range(lo..=hi);
            }
        }
        SwarmState::random(cfg, self.init_side, &mut rng)
    }

    /// `--out` beats `SPP_OUT_DIR`, which beats the config.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        match std::env::var_os(OUT_DIR_ENV) {
            Some(p) if !p.is_empty() => PathBuf::from(p),
            _ => self.output.dir.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    /// Undefined circular mean; the agent kept its own heading.
    DegenerateMean { t: usize, agent: usize },
    PhaseStart { t: usize, label: String },
    ControlsClamped { count: usize },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceRecord {
    pub seed: u64,
    pub metrics: MetricSeries,
    /// Snapshots at the sampled steps (empty unless requested).
    pub states: Vec<SwarmState>,
    pub events: Vec<Event>,
    /// Plan runs only.
    pub in_target_at_horizon: Option<bool>,
}

/// Noise-driven evolution for `steps` steps, sampling metrics every `stride` steps.
pub fn simulate(
    cfg: &SimConfig,
    kind: SystemKind,
    init: SwarmState,
    steps: usize,
    stride: usize,
    keep_states: bool,
) -> TraceRecord {
    let mut rec = TraceRecord {
        seed: cfg.seed(),
        ..Default::default()
    };
    let mut noise = NoiseSource::new(*cfg.noise(), cfg.n(), cfg.seed());
    let mut xi = vec![0.0; cfg.n()];
    let mut state = init;
    let stride = stride.max(1);
    rec.metrics.push(cfg, &state);
    if keep_states {
        rec.states.push(state.clone());
    }
    for _ in 0..steps {
        noise.fill(&mut xi);
        let (next, degenerate) = step_lenient(cfg, &state, kind, &xi);
        for agent in degenerate {
            rec.events.push(Event::DegenerateMean { t: state.t, agent });
        }
        state = next;
        if state.t.is_multiple_of(stride) {
            rec.metrics.push(cfg, &state);
            if keep_states {
                rec.states.push(state.clone());
            }
        }
    }
    rec
}

pub fn run_free(cfg: &ExperimentConfig, seed: u64) -> Result<TraceRecord, ExperimentError> {
    let sim = cfg.sim_config(seed)?;
    let init = cfg.initial_state(&sim, seed);
    Ok(simulate(&sim, cfg.system, init, cfg.steps, cfg.stride, cfg.output.states))
}

/// Replay the configured plan; the plan horizon replaces `steps`.
pub fn run_steered(cfg: &ExperimentConfig, seed: u64) -> Result<(ControlPlan, TraceRecord), ExperimentError> {
    let Mode::Steered {
        plan,
        adversary,
        sample_precondition,
    } = &cfg.mode
    else {
        return Err(ExperimentError::Config("mode must be 'steered'".into()));
    };
    let sim = cfg.sim_config(seed)?;
    let plan = plan.build(cfg.system, &sim)?;
    let init = if *sample_precondition {
        sample_initial(&sim, plan.precondition, cfg.init_side, seed)
    } else {
        cfg.initial_state(&sim, seed)
    };
    if let Some(pre) = plan.precondition {
        if !pre.contains(&init.headings) {
            return Err(ExperimentError::Precondition(format!("initial headings outside {pre:?}")));
        }
    }
    let mut adv = adversary.build(seed);
    let out = replay(&plan, &sim, &init, adv.as_mut(), true)?;
    let mut rec = TraceRecord {
        seed,
        in_target_at_horizon: Some(out.in_target_at_horizon),
        ..Default::default()
    };
    for (t, label) in &out.phase_starts {
        rec.events.push(Event::PhaseStart { t: *t, label: label.clone() });
    }
    if out.clamps > 0 {
        rec.events.push(Event::ControlsClamped { count: out.clamps });
    }
    for s in out.states.iter().step_by(cfg.stride) {
        rec.metrics.push(&sim, s);
        if cfg.output.states {
            rec.states.push(s.clone());
        }
    }
    Ok((plan, rec))
}

/// Reachability report for the configured plan, sampling starts inside its precondition.
pub fn run_verify(cfg: &ExperimentConfig, seed: u64) -> Result<(ControlPlan, ReachabilityReport), ExperimentError> {
    let Mode::Verify { plan, adversary, trials } = &cfg.mode else {
        return Err(ExperimentError::Config("mode must be 'verify'".into()));
    };
    let sim = cfg.sim_config(seed)?;
    let plan = plan.build(cfg.system, &sim)?;
    let pre = plan.precondition;
    let side = cfg.init_side;
    let report = check_robust_reachability(
        &plan,
        &sim,
        |trial| sample_initial(&sim, pre, side, seed.wrapping_mul(1_000_003).wrapping_add(trial)),
        *adversary,
        *trials,
    )?;
    Ok((plan, report))
}

/// Free or steered runs for every configured seed, written to `dir` with an index.
pub fn run_all(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<TraceRecord>, ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    let records: Vec<TraceRecord> = cfg
        .seeds
        .par_iter()
        .map(|&seed| -> Result<TraceRecord, ExperimentError> {
            let rec = match cfg.mode {
                Mode::Free => run_free(cfg, seed)?,
                Mode::Steered { .. } => run_steered(cfg, seed)?.1,
                Mode::Verify { .. } => return Err(ExperimentError::Config("use run_verify for verify mode".into())),
            };
            csv::write_metrics(&rec.metrics, &dir.join(format!("metrics_seed{seed}.csv")))?;
            if cfg.output.states {
                csv::write_states(&rec.states, &dir.join(format!("states_seed{seed}.csv")))?;
            }
            Ok(rec)
        })
        .collect::<Result<_, _>>()?;
    csv::write_index(&records, cfg.output.states, &dir.join("index.csv"))?;
    Ok(records)
}

/// Number of sampled steps with `d_θ ≥ π`.
pub fn span_excursions(series: &MetricSeries) -> usize {
    series.d_theta.iter().filter(|&&d| d >= PI - 1e-9).count()
}
