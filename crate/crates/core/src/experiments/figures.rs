//! The four order-parameter figure presets: System II / System I, with
//! homogeneous (`r = 1`) or random (`U[0, 2]`) radii, each for `n ∈ {10, 25, 40}`.

use std::path::Path;

use super::{simulate, ExperimentConfig, ExperimentError, Mode, OutputSpec, RadiiSpec, TraceRecord};
use crate::dynamics::{Boundary, SystemKind};
use crate::noise::NoiseSpec;

pub const FIGURE_SIZES: [usize; 3] = [10, 25, 40];
/// Steps per series in the published runs.
pub const FIGURE_STEPS: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct FigureData {
    pub id: u8,
    pub system: SystemKind,
    /// One trace per entry of [`FIGURE_SIZES`].
    pub series: Vec<(usize, TraceRecord)>,
}

/// Experiment configuration behind figure `id` for a given swarm size.
pub fn figure_config(id: u8, n: usize, seed: u64, steps: usize) -> Result<ExperimentConfig, ExperimentError> {
    let (system, radii) = match id {
        1 => (SystemKind::SystemII, RadiiSpec::Fixed { value: 1.0 }),
        2 => (SystemKind::SystemI, RadiiSpec::Fixed { value: 1.0 }),
        3 => (SystemKind::SystemII, RadiiSpec::Uniform { lo: 0.0, hi: 2.0 }),
        4 => (SystemKind::SystemI, RadiiSpec::Uniform { lo: 0.0, hi: 2.0 }),
        _ => return Err(ExperimentError::Config(format!("figure id must be 1..=4, got {id}"))),
    };
    let cfg = ExperimentConfig {
        system,
        n,
        speed: 0.01,
        boundary: Boundary::Periodic(5.0),
        radii,
        noise: NoiseSpec::UniformIid { half_width: 0.6 },
        init_side: 5.0,
        steps,
        stride: 1,
        seeds: vec![seed],
        mode: Mode::Free,
        output: OutputSpec::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Run the three series of figure `id`. Series `k` uses seed `seed + k`.
pub fn reproduce_figure(id: u8, seed: u64, steps: usize) -> Result<FigureData, ExperimentError> {
    let mut series = Vec::new();
    let mut system = SystemKind::SystemII;
    for (k, &n) in FIGURE_SIZES.iter().enumerate() {
        let s = seed.wrapping_add(k as u64);
        let cfg = figure_config(id, n, s, steps)?;
        system = cfg.system;
        let sim = cfg.sim_config(s)?;
        let init = cfg.initial_state(&sim, s);
        series.push((n, simulate(&sim, cfg.system, init, steps, 1, false)));
    }
    Ok(FigureData { id, system, series })
}

impl FigureData {
    pub fn header(&self) -> Vec<String> {
        std::iter::once("t".to_string())
            .chain(self.series.iter().map(|(n, _)| format!("phi_n{n}")))
            .collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        let len = self.series.iter().map(|(_, r)| r.metrics.len()).min().unwrap_or(0);
        (0..len)
            .map(|i| {
                std::iter::once(self.series[0].1.metrics.t[i] as f64)
                    .chain(self.series.iter().map(|(_, r)| r.metrics.phi[i]))
                    .collect()
            })
            .collect()
    }

    /// `t,phi_n10,phi_n25,phi_n40`.
    pub fn write_csv(&self, path: &Path) -> Result<(), ExperimentError> {
        super::csv::write_table(&self.header(), &self.rows(), true, path)
    }
}
