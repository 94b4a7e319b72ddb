//! Density lower bounds for the supported noise families, checked against
//! histograms of the actual sampler.

use spp_core::noise::{certificate, empirical_density_check, NoiseSpec};

fn main() {
    let specs = [
        NoiseSpec::UniformIid { half_width: 0.6 },
        NoiseSpec::GaussianIid { sigma: 0.4 },
        NoiseSpec::TruncatedGaussianIid { sigma: 0.4, cut: 0.8 },
    ];
    for spec in specs {
        for n in [1, 10] {
            let cert = certificate(&spec, 0.6, n).unwrap();
            let report = empirical_density_check(&spec, &cert, 1_000_000, 24, 1).unwrap();
            println!(
                "{spec:?} n={n}: rho={:.6e} marginal={:.6} check pass={}",
                cert.rho_lower,
                cert.marginal_lower(),
                report.pass
            );
        }
    }
    match certificate(&NoiseSpec::UniformIid { half_width: 0.5 }, 0.6, 1) {
        Ok(c) => println!("unexpected certificate {c:?}"),
        Err(e) => println!("uniform on [-0.5, 0.5] with eta 0.6: {e}"),
    }
}
