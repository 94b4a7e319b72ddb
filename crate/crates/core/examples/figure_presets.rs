//! Order-parameter series behind the four figure presets, written as CSV.
//!
//! `cargo run --release --example figure_presets -- [steps] [out_dir]`

use std::path::PathBuf;

use spp_core::experiments::figures::reproduce_figure;

fn main() {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "out".into()));
    for id in 1..=4 {
        let fig = reproduce_figure(id, 1, steps).unwrap();
        let path = dir.join(format!("figure{id}.csv"));
        fig.write_csv(&path).unwrap();
        let means: Vec<String> = fig
            .series
            .iter()
            .map(|(n, r)| format!("n={n}: mean phi {:.3}", r.metrics.phi.iter().sum::<f64>() / r.metrics.len() as f64))
            .collect();
        println!("figure {id} (System {}): {} -> {}", fig.system, means.join(", "), path.display());
    }
}
