use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spp_core::experiments::csv::{read_metrics, write_metrics, write_states};
use spp_core::experiments::figures::{reproduce_figure, FIGURE_STEPS};
use spp_core::experiments::{run_all, run_steered, run_verify, ExperimentConfig, ExperimentError, Mode};
use spp_core::verify::{extract_switches_between, tail_report};

#[derive(Parser)]
#[command(name = "spp", about = "Noisy self-propelled particle swarms: simulate, steer, verify")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Free noise-driven runs for every configured seed.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay the configured control plan against its adversary.
    Steer {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Robust-reachability report for the configured plan.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Order-parameter series for figure presets 1-4.
    Figure {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        figure: u8,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = FIGURE_STEPS)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Order/disorder passages and tail statistics from a metrics CSV.
    Switches {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long, default_value_t = 0.85)]
        high: f64,
        #[arg(long, default_value_t = 0.4)]
        low: f64,
    },
}

fn load(config: &Path, seed: Option<u64>) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, text).map_err(|e| ExperimentError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn mkdir(dir: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn execute(cmd: Cmd) -> Result<ExitCode, ExperimentError> {
    match cmd {
        Cmd::Run { config, seed, steps, out } => {
            let mut cfg = load(&config, seed)?;
            if !matches!(cfg.mode, Mode::Free) {
                cfg.mode = Mode::Free;
            }
            if let Some(s) = steps {
                cfg.steps = s;
                cfg.validate()?;
            }
            let dir = cfg.output_dir(out.as_deref());
            let recs = run_all(&cfg, &dir)?;
            for r in &recs {
                let last = r.metrics.phi.last().copied().unwrap_or(f64::NAN);
                println!("seed {}: {} samples, final phi {last:.4}", r.seed, r.metrics.len());
            }
            println!("wrote {}", dir.display());
        }
        Cmd::Steer { config, seed, out } => {
            let cfg = load(&config, seed)?;
            let dir = cfg.output_dir(out.as_deref());
            mkdir(&dir)?;
            for &s in &cfg.seeds {
                let (plan, rec) = run_steered(&cfg, s)?;
                write_metrics(&rec.metrics, &dir.join(format!("metrics_seed{s}.csv")))?;
                if cfg.output.states {
                    write_states(&rec.states, &dir.join(format!("states_seed{s}.csv")))?;
                }
                let audit = plan.to_toml().map_err(|e| ExperimentError::Config(e.to_string()))?;
                write_text(&dir.join("plan.toml"), &audit)?;
                println!(
                    "seed {s}: plan {} horizon {} regime {:?} in_target {}",
                    plan.name,
                    plan.horizon(),
                    plan.regime,
                    rec.in_target_at_horizon.unwrap_or(false)
                );
            }
        }
        Cmd::Verify { config, seed, out } => {
            let cfg = load(&config, seed)?;
            let dir = cfg.output_dir(out.as_deref());
            mkdir(&dir)?;
            let mut failures = 0;
            for &s in &cfg.seeds {
                let (plan, report) = run_verify(&cfg, s)?;
                write_text(&dir.join(format!("reachability_seed{s}.csv")), &report.to_csv())?;
                let summary = format!("plan {} regime {:?}\n{}\n", plan.name, plan.regime, report.summary());
                write_text(&dir.join(format!("reachability_seed{s}.txt")), &summary)?;
                print!("{summary}");
                failures += report.failures;
            }
            if failures > 0 {
                return Ok(ExitCode::from(3));
            }
        }
        Cmd::Figure { figure, seed, steps, out } => {
            let data = reproduce_figure(figure, seed, steps)?;
            let dir = out.unwrap_or_else(|| {
                std::env::var_os(spp_core::experiments::OUT_DIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from)
            });
            let path = dir.join(format!("figure{figure}.csv"));
            data.write_csv(&path)?;
            println!("figure {figure} (System {}): wrote {}", data.system, path.display());
        }
        Cmd::Switches { metrics, high, low } => {
            let series = read_metrics(&metrics)?;
            let rec = extract_switches_between(&series.phi, high, low);
            let to_t = |i: usize| series.t[i];
            let ordered: Vec<usize> = rec.ordered_hits().map(to_t).collect();
            let disordered: Vec<usize> = rec.disordered_hits().map(to_t).collect();
            println!("ordered hits (phi >= {high}): {}", ordered.len());
            println!("disordered hits (phi <= {low}): {}", disordered.len());
            println!("complete cycles: {}", rec.cycles());
            let gaps: Vec<usize> = disordered.windows(2).map(|w| w[1] - w[0]).collect();
            match tail_report(&gaps) {
                Ok(t) => {
                    println!("log-survival slope {:.6e} (r^2 {:.3})", t.log_slope, t.r_squared);
                    match t.envelope {
                        Some((c, block)) => println!("envelope c={c:.4} T={block}"),
                        None => println!("no envelope"),
                    }
                }
                Err(e) => println!("tail report: {e}"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
