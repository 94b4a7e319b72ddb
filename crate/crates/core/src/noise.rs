//! Independent per-agent heading noise and density lower-bound certificates.
//!
//! Every agent draws from its own ChaCha8 stream (same seed, stream id =
//! agent index + 1), so a step's noise vector does not depend on the order in
//! which agents are sampled. Stream 0 is left for initial-state sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("invalid noise spec: {0}")]
    InvalidSpec(String),
    #[error("no density certificate for eta={eta}: {reason}")]
    NoCertificate { eta: f64, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// `U[-half_width, half_width]`.
    #[serde(rename = "uniform")]
    UniformIid { half_width: f64 },
    #[serde(rename = "gaussian")]
    GaussianIid { sigma: f64 },
    /// `N(0, sigma²)` conditioned on `[-cut, cut]`.
    #[serde(rename = "truncated_gaussian")]
    TruncatedGaussianIid { sigma: f64, cut: f64 },
    /// No perturbation at all.
    Zero,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), NoiseError> {
        let pos = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(NoiseError::InvalidSpec(format!("{name} must be > 0, got {x}")))
            }
        };
        match *self {
            NoiseSpec::UniformIid { half_width } => pos("half_width", half_width),
            NoiseSpec::GaussianIid { sigma } => pos("sigma", sigma),
            NoiseSpec::TruncatedGaussianIid { sigma, cut } => {
                pos("sigma", sigma)?;
                pos("cut", cut)
            }
            NoiseSpec::Zero => Ok(()),
        }
    }

    /// Marginal density of a single draw at `x`.
    pub fn marginal_density(&self, x: f64) -> f64 {
        match *self {
            NoiseSpec::UniformIid { half_width } => {
                if x.abs() <= half_width {
                    1.0 / (2.0 * half_width)
                } else {
                    0.0
                }
            }
            NoiseSpec::GaussianIid { sigma } => normal_pdf(x, sigma),
            NoiseSpec::TruncatedGaussianIid { sigma, cut } => {
                if x.abs() <= cut {
                    normal_pdf(x, sigma) / erf(cut / (sigma * SQRT_2))
                } else {
                    0.0
                }
            }
            NoiseSpec::Zero => 0.0,
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSpec::UniformIid { half_width } => Uniform::new_inclusive(-half_width, half_width)
                .expect("validated half_width")
                .sample(rng),
            NoiseSpec::GaussianIid { sigma } => Normal::new(0.0, sigma).expect("validated sigma").sample(rng),
            NoiseSpec::TruncatedGaussianIid { sigma, cut } => {
                let normal = Normal::new(0.0, sigma).expect("validated sigma");
                // acceptance rate is erf(cut/σ√2); fall back to clamping after many rejections
                for _ in 0..10_000 {
                    let x = normal.sample(rng);
                    if x.abs() <= cut {
                        return x;
                    }
                }
                rng.random_range(-cut..=cut)
            }
            NoiseSpec::Zero => 0.0,
        }
    }
}

fn normal_pdf(x: f64, sigma: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
}

/// `n` independent draws from a caller-supplied generator.
pub fn sample<R: Rng>(spec: &NoiseSpec, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| spec.draw(rng)).collect()
}

/// One generator per agent, split by stream id.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    spec: NoiseSpec,
    streams: Vec<ChaCha8Rng>,
}

impl NoiseSource {
    pub fn new(spec: NoiseSpec, n: usize, seed: u64) -> Self {
        let streams = (0..n)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64 + 1);
                rng
            })
            .collect();
        Self { spec, streams }
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for (x, rng) in out.iter_mut().zip(&mut self.streams) {
            *x = self.spec.draw(rng);
        }
    }

    pub fn next_vec(&mut self) -> Vec<f64> {
        let mut v = vec![0.0; self.streams.len()];
        self.fill(&mut v);
        v
    }
}

/// Generator reserved for initial states and random radii (stream 0).
pub fn setup_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Lower bound `ρ̄` of the joint noise density on `[-η, η]^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseBoundCertificate {
    pub eta: f64,
    pub n: usize,
    pub rho_lower: f64,
}

impl NoiseBoundCertificate {
    /// Per-coordinate bound `ρ̄^{1/n}`.
    pub fn marginal_lower(&self) -> f64 {
        self.rho_lower.powf(1.0 / self.n as f64)
    }
}

/// Tightest analytic `ρ̄` for the product density: the marginal is symmetric and
/// non-increasing in `|x|`, so its infimum on `[-η, η]` sits at `η`.
pub fn certificate(spec: &NoiseSpec, eta: f64, n: usize) -> Result<NoiseBoundCertificate, NoiseError> {
    spec.validate()?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(NoiseError::NoCertificate {
            eta,
            reason: "eta must be > 0".into(),
        });
    }
    if n == 0 {
        return Err(NoiseError::InvalidSpec("n must be >= 1".into()));
    }
    let support = match *spec {
        NoiseSpec::UniformIid { half_width } => Some(half_width),
        NoiseSpec::TruncatedGaussianIid { cut, .. } => Some(cut),
        NoiseSpec::GaussianIid { .. } => None,
        NoiseSpec::Zero => {
            return Err(NoiseError::NoCertificate {
                eta,
                reason: "zero noise has no density".into(),
            })
        }
    };
    if let Some(s) = support {
        if eta > s {
            return Err(NoiseError::NoCertificate {
                eta,
                reason: format!("eta exceeds the noise support {s}"),
            });
        }
    }
    let rho_lower = spec.marginal_density(eta).powi(n as i32);
    Ok(NoiseBoundCertificate { eta, n, rho_lower })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinCheck {
    pub lo: f64,
    pub hi: f64,
    pub density: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityReport {
    pub pass: bool,
    pub samples: usize,
    pub bins: Vec<BinCheck>,
}

impl DensityReport {
    pub fn failing_bins(&self) -> impl Iterator<Item = &BinCheck> {
        self.bins.iter().filter(|b| b.density < b.threshold)
    }
}

/// Histogram one agent's marginal on `[-η, η]`; pass iff every bin's empirical
/// density is at least `ρ̄^{1/n}` minus three standard errors.
pub fn empirical_density_check(
    spec: &NoiseSpec,
    cert: &NoiseBoundCertificate,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<DensityReport, NoiseError> {
    spec.validate()?;
    if samples < 10_000 || bins == 0 {
        return Err(NoiseError::InvalidSpec(format!(
            "need >= 10^4 samples and >= 1 bin, got {samples} and {bins}"
        )));
    }
    let eta = cert.eta;
    let width = 2.0 * eta / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut src = NoiseSource::new(*spec, 1, seed);
    let mut buf = [0.0];
    for _ in 0..samples {
        src.fill(&mut buf);
        let x = buf[0];
        if x.abs() <= eta {
            let k = (((x + eta) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
    }
    let target = cert.marginal_lower();
    let total = samples as f64;
    let bins: Vec<BinCheck> = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let p = c as f64 / total;
            let se = (p * (1.0 - p) / total).sqrt() / width;
            BinCheck {
                lo: -eta + k as f64 * width,
                hi: -eta + (k + 1) as f64 * width,
                density: p / width,
                threshold: target - 3.0 * se,
            }
        })
        .collect();
    let pass = bins.iter().all(|b| b.density >= b.threshold);
    Ok(DensityReport { pass, samples, bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_samples_stay_in_support() {
        let spec = NoiseSpec::UniformIid { half_width: 0.6 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs = sample(&spec, 100_000, &mut rng);
        assert!(xs.iter().all(|x| x.abs() <= 0.6));
    }

    #[test]
    fn uniform_mean_within_clt_bound() {
        let h = 0.6;
        let spec = NoiseSpec::UniformIid { half_width: h };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs = sample(&spec, 1_000_000, &mut rng);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() <= 4.0 * h / 1000.0, "mean {mean}");
    }

    #[test]
    fn seeded_streams_repeat() {
        let spec = NoiseSpec::GaussianIid { sigma: 0.3 };
        let mut a = NoiseSource::new(spec, 5, 42);
        let mut b = NoiseSource::new(spec, 5, 42);
        for _ in 0..10 {
            assert_eq!(a.next_vec(), b.next_vec());
        }
        let mut c = NoiseSource::new(spec, 5, 43);
        assert_ne!(a.next_vec(), c.next_vec());
    }

    #[test]
    fn agent_streams_do_not_depend_on_n() {
        let spec = NoiseSpec::UniformIid { half_width: 1.0 };
        let mut small = NoiseSource::new(spec, 2, 9);
        let mut big = NoiseSource::new(spec, 6, 9);
        for _ in 0..5 {
            assert_eq!(small.next_vec()[..], big.next_vec()[..2]);
        }
    }

    #[test]
    fn truncated_samples_respect_cut() {
        let spec = NoiseSpec::TruncatedGaussianIid { sigma: 1.0, cut: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(sample(&spec, 10_000, &mut rng).iter().all(|x| x.abs() <= 0.5));
    }

    #[test]
    fn certificate_examples() {
        let u = NoiseSpec::UniformIid { half_width: 0.6 };
        assert_eq!(certificate(&u, 0.6, 1).unwrap().rho_lower, 1.0 / 1.2);
        assert!(matches!(certificate(&u, 0.7, 1), Err(NoiseError::NoCertificate { .. })));
        let g = NoiseSpec::GaussianIid { sigma: 1.0 };
        let c = certificate(&g, 1.0, 2).unwrap();
        assert_abs_diff_eq!(c.rho_lower, 0.058550, epsilon = 1e-6);
        let expected = ((-0.5f64).exp() / (2.0 * PI).sqrt()).powi(2);
        assert_abs_diff_eq!(c.rho_lower, expected, epsilon = 1e-15);
        let t = NoiseSpec::TruncatedGaussianIid { sigma: 1.0, cut: 2.0 };
        let ct = certificate(&t, 1.0, 1).unwrap();
        assert_abs_diff_eq!(ct.rho_lower, normal_pdf(1.0, 1.0) / 0.954_499_736_103_642, epsilon = 1e-12);
        assert!(certificate(&t, 2.5, 1).is_err());
        assert!(certificate(&NoiseSpec::Zero, 0.1, 1).is_err());
    }

    #[test]
    fn certificate_never_exceeds_density_infimum() {
        let specs = [
            NoiseSpec::UniformIid { half_width: 0.9 },
            NoiseSpec::GaussianIid { sigma: 0.4 },
            NoiseSpec::TruncatedGaussianIid { sigma: 0.7, cut: 1.1 },
        ];
        for spec in specs {
            for eta in [0.1, 0.5, 0.9] {
                let cert = certificate(&spec, eta, 3).unwrap();
                let inf = (0..=1000)
                    .map(|k| spec.marginal_density(-eta + 2.0 * eta * k as f64 / 1000.0))
                    .fold(f64::INFINITY, f64::min)
                    .powi(3);
                assert!(cert.rho_lower <= inf * (1.0 + 1e-12), "{spec:?} {eta}");
            }
        }
    }

    #[test]
    fn density_check_examples() {
        let u = NoiseSpec::UniformIid { half_width: 0.6 };
        let cert = certificate(&u, 0.6, 1).unwrap();
        assert!(empirical_density_check(&u, &cert, 100_000, 20, 1).unwrap().pass);

        let narrow = NoiseSpec::UniformIid { half_width: 0.3 };
        let report = empirical_density_check(&narrow, &cert, 100_000, 20, 1).unwrap();
        assert!(!report.pass);
        assert!(report.failing_bins().count() >= 10);

        let g = NoiseSpec::GaussianIid { sigma: 1.0 };
        let gc = certificate(&g, 1.0, 1).unwrap();
        assert!(empirical_density_check(&g, &gc, 1_000_000, 20, 3).unwrap().pass);

        assert!(empirical_density_check(&u, &cert, 10, 20, 1).is_err());
    }

    #[test]
    fn spec_toml_roundtrip() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct Wrap {
            noise: NoiseSpec,
        }
        let w: Wrap = toml::from_str("noise = { kind = \"uniform\", half_width = 0.6 }").unwrap();
        assert_eq!(w.noise, NoiseSpec::UniformIid { half_width: 0.6 });
        let back: Wrap = toml::from_str(&toml::to_string(&w).unwrap()).unwrap();
        assert_eq!(back, w);
        assert!(NoiseSpec::UniformIid { half_width: 0.0 }.validate().is_err());
    }
}
