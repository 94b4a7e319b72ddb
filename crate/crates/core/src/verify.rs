//! Robust-reachability replay, analytic cross-checks and first-passage statistics.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{wrap_angle, SimConfig, SwarmState};
use crate::metrics::{heading_span, order_parameter};
use crate::steering::{
    replay, Adversary, ControlPlan, EndpointAdversary, ScriptedAdversary, SteeringError, TargetSet, UniformAdversary,
    ZeroAdversary,
};

/// Exhaustive enumeration is used up to this many disturbance sequences per initial state.
pub const EXHAUSTIVE_LIMIT: u64 = 100_000;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("insufficient data: {got} values, need at least {needed}")]
    Insufficient { got: usize, needed: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Steering(#[from] SteeringError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    /// `b_i ∈ {-δ_i, +δ_i}` at random; exhaustive over `{-δ_i, 0, +δ_i}` when small enough.
    Endpoint,
    Uniform,
    Zero,
}

impl AdversaryKind {
    pub fn build(self, seed: u64) -> Box<dyn Adversary + Send> {
        match self {
            AdversaryKind::Endpoint => Box::new(EndpointAdversary::new(seed)),
            AdversaryKind::Uniform => Box::new(UniformAdversary::new(seed)),
            AdversaryKind::Zero => Box::new(ZeroAdversary),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReachabilityReport {
    pub trials: usize,
    pub failures: usize,
    pub horizon: usize,
    /// Latest first-hit time among successful trials.
    pub worst_reached: Option<usize>,
    pub reached_at: Vec<Option<usize>>,
    pub in_target_at_horizon: Vec<bool>,
    pub adversary: String,
    /// Disturbance sequences replayed per initial state (1 unless exhaustive).
    pub branches: u64,
}

impl ReachabilityReport {
    pub fn summary(&self) -> String {
        format!(
            "trials={} failures={} horizon={} worst_reached={} adversary={} branches={}",
            self.trials,
            self.failures,
            self.horizon,
            self.worst_reached.map_or("-".into(), |t| t.to_string()),
            self.adversary,
            self.branches,
        )
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,reached_at,in_target_at_horizon\n");
        for (i, (r, h)) in self.reached_at.iter().zip(&self.in_target_at_horizon).enumerate() {
            let r = r.map_or(String::new(), |t| t.to_string());
            s.push_str(&format!("{i},{r},{}\n", u8::from(*h)));
        }
        s
    }
}

fn branch_count(n: usize, horizon: usize) -> Option<u64> {
    let exp = u32::try_from(n.checked_mul(horizon)?).ok()?;
    3u64.checked_pow(exp)
}

/// Replay `plan` from `trials` initial states drawn by `init(trial)`.
///
/// A trial fails when the target is not met at any step in `[0, horizon]`
/// (for some disturbance sequence, when enumerating exhaustively).
pub fn check_robust_reachability<F>(
    plan: &ControlPlan,
    cfg: &SimConfig,
    init: F,
    adversary: AdversaryKind,
    trials: usize,
) -> Result<ReachabilityReport, VerifyError>
where
    F: Fn(u64) -> SwarmState + Sync,
{
    let horizon = plan.horizon();
    let exhaustive = adversary == AdversaryKind::Endpoint
        && branch_count(cfg.n(), horizon).is_some_and(|b| b <= EXHAUSTIVE_LIMIT);
    let branches = if exhaustive {
        branch_count(cfg.n(), horizon).unwrap_or(1)
    } else {
        1
    };
    let per_trial: Vec<Result<(Option<usize>, bool), SteeringError>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let start = init(trial);
            if exhaustive {
                let len = cfg.n() * horizon;
                let mut worst: Option<usize> = Some(0);
                let mut all_hold = true;
                for code in 0..branches {
                    let mut c = code;
                    let choices = (0..len)
                        .map(|_| {
                            let d = (c % 3) as i8 - 1;
                            c /= 3;
                            d
                        })
                        .collect();
                    let out = replay(plan, cfg, &start, &mut ScriptedAdversary { choices }, false)?;
                    all_hold &= out.in_target_at_horizon;
                    worst = match (worst, out.reached_at) {
                        (Some(a), Some(b)) => Some(a.max(b)),
                        _ => None,
                    };
                }
                Ok((worst, all_hold))
            } else {
                let mut adv = adversary.build(trial.wrapping_mul(0x9E37_79B9).wrapping_add(1));
                let out = replay(plan, cfg, &start, adv.as_mut(), false)?;
                Ok((out.reached_at, out.in_target_at_horizon))
            }
        })
        .collect();
    let mut reached_at = Vec::with_capacity(trials);
    let mut in_target = Vec::with_capacity(trials);
    for r in per_trial {
        let (a, b) = r?;
        reached_at.push(a);
        in_target.push(b);
    }
    let failures = reached_at.iter().filter(|r| r.is_none()).count();
    let adversary = if exhaustive {
        "exhaustive {-δ, 0, +δ}".to_string()
    } else {
        format!("{adversary:?}").to_lowercase()
    };
    Ok(ReachabilityReport {
        trials,
        failures,
        horizon,
        worst_reached: reached_at.iter().flatten().copied().max(),
        reached_at,
        in_target_at_horizon: in_target,
        adversary,
        branches,
    })
}

/// Random initial state satisfying `precondition` (uniform headings when `None`).
pub fn sample_initial(cfg: &SimConfig, precondition: Option<TargetSet>, side: f64, seed: u64) -> SwarmState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SwarmState::random(cfg, side, &mut rng);
    match precondition {
        Some(TargetSet::OrderBox(a)) => {
            let h = (a / 2.0).min(PI);
            for th in &mut s.headings {
                *th = wrap_angle(rng.random_range(-h..=h));
            }
        }
        Some(TargetSet::SpanBelow(a)) => {
            let c = rng.random_range(-PI..PI);
            let h = 0.499 * a.min(TAU) * rng.random::<f64>();
            for th in &mut s.headings {
                *th = wrap_angle(c + rng.random_range(-h..=h));
            }
        }
        Some(TargetSet::HeadingBand { center, half_width }) => {
            for th in &mut s.headings {
                *th = wrap_angle(center + rng.random_range(-half_width..=half_width));
            }
        }
        Some(TargetSet::Ordered(eps)) => {
            // a span within the span-to-order bound certifies φ ≥ 1 - ε
            let h = span_order_bound(eps) / 2.0;
            let c = rng.random_range(-PI..PI);
            for th in &mut s.headings {
                *th = wrap_angle(c + rng.random_range(-h..=h));
            }
        }
        _ => {}
    }
    s
}

/// Largest heading span guaranteeing `φ ≥ 1 - ε`.
pub fn span_order_bound(eps: f64) -> f64 {
    ((1.0 - eps) * (1.0 - eps)).acos()
}

/// `true` iff `span ≤ bound ⇒ φ ≥ 1 - ε` holds for `headings`.
pub fn span_order_check(headings: &[f64], eps: f64) -> bool {
    heading_span(headings) > span_order_bound(eps) || order_parameter(headings) >= 1.0 - eps - 1e-12
}

/// Shortest covering arc whose complement contains one of `grid` equally spaced cut
/// points; an upper bound on the exact span, tight whenever the largest gap exceeds `2π / grid`.
pub fn span_bruteforce_oracle(headings: &[f64], grid: usize) -> f64 {
    if headings.is_empty() {
        return 0.0;
    }
    (0..grid.max(1))
        .map(|k| {
            let c = -PI + TAU * k as f64 / grid as f64;
            let (lo, hi) = headings.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &th| {
                let o = (th - c).rem_euclid(TAU);
                (lo.min(o), hi.max(o))
            });
            hi - lo
        })
        .fold(f64::INFINITY, f64::min)
}

/// Alternating first-passage times into `{φ ≥ high}` (odd entries, 1-based) and `{φ ≤ low}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchRecord {
    pub times: Vec<usize>,
}

impl SwitchRecord {
    pub fn ordered_hits(&self) -> impl Iterator<Item = usize> + '_ {
        self.times.iter().step_by(2).copied()
    }

    pub fn disordered_hits(&self) -> impl Iterator<Item = usize> + '_ {
        self.times.iter().skip(1).step_by(2).copied()
    }

    /// `τ_{2k+2} - τ_{2k}`: time between consecutive disordered hits.
    pub fn gaps(&self) -> Vec<usize> {
        let d: Vec<usize> = self.disordered_hits().collect();
        d.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `τ_i - τ_{i-1}` for every consecutive pair.
    pub fn passage_times(&self) -> Vec<usize> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Completed order → disorder → order cycles.
    pub fn cycles(&self) -> usize {
        self.times.len().saturating_sub(1) / 2
    }
}

/// First-passage alternation with `{φ ≥ 1-ε}` and `{φ ≤ ε}`; indices are series positions.
pub fn extract_switches(series: &[f64], eps: f64) -> SwitchRecord {
    extract_switches_between(series, 1.0 - eps, eps)
}

/// As [`extract_switches`] with independent thresholds.
pub fn extract_switches_between(series: &[f64], high: f64, low: f64) -> SwitchRecord {
    let mut times = Vec::new();
    let mut want_ordered = true;
    for (t, &phi) in series.iter().enumerate() {
        let hit = if want_ordered { phi >= high } else { phi <= low };
        if hit {
            times.push(t);
            want_ordered = !want_ordered;
        }
    }
    SwitchRecord { times }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailReport {
    /// `(t, P(gap > t))` at every distinct gap value.
    pub survival: Vec<(usize, f64)>,
    /// Least-squares slope of `ln P(gap > t)` against `t` (points with at least five exceedances).
    pub log_slope: f64,
    pub r_squared: f64,
    /// `(c, T)` with `P(gap > t) ≤ c^{⌊t/T⌋}` for every tabulated `t`, if `c < 1`.
    pub envelope: Option<(f64, usize)>,
}

pub fn tail_report(gaps: &[usize]) -> Result<TailReport, VerifyError> {
    const MIN_GAPS: usize = 20;
    if gaps.len() < MIN_GAPS {
        return Err(VerifyError::Insufficient {
            got: gaps.len(),
            needed: MIN_GAPS,
        });
    }
    let mut sorted = gaps.to_vec();
    sorted.sort_unstable();
    let total = sorted.len() as f64;
    let exceed = |t: usize| sorted.len() - sorted.partition_point(|&g| g <= t);
    let mut ts = sorted.clone();
    ts.dedup();
    let survival: Vec<(usize, f64)> = ts.iter().map(|&t| (t, exceed(t) as f64 / total)).collect();

    let pts: Vec<(f64, f64)> = ts
        .iter()
        .filter(|&&t| exceed(t) >= 5)
        .map(|&t| (t as f64, (exceed(t) as f64 / total).ln()))
        .collect();
    let (log_slope, r_squared) = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let r2 = if sxx > 0.0 && syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
        (slope, r2)
    } else {
        (0.0, 1.0)
    };

    let block = sorted[sorted.len() / 2].max(1);
    let c = survival
        .iter()
        .filter(|(t, _)| *t >= block)
        .map(|&(t, s)| s.powf(1.0 / (t / block) as f64))
        .fold(0.0, f64::max);
    let envelope = (c < 1.0).then_some((c, block));
    Ok(TailReport {
        survival,
        log_slope,
        r_squared,
        envelope,
    })
}
