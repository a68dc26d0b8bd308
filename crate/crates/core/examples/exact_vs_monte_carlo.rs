// Exact MSE from Poisson sums next to a seeded Monte Carlo estimate.

use superres::model::CrosstalkMatrix;
use superres::statistics::{exact_mse, mc_error_stats, EstimatorKind, SamplingConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let xt = CrosstalkMatrix::calibrated();
    for (i, eps) in [0.05, 0.2, 1.0].into_iter().enumerate() {
        let n = 10_000;
        let exact = exact_mse(eps, n, &xt)?;
        let cfg = SamplingConfig::new(n, 7 + i as u64, 20_000);
        let mc = mc_error_stats(eps, &xt, &cfg, &EstimatorKind::mle_closed())?;
        let z = (mc.stats.mse - exact.mse) / mc.mse_se;
        println!(
            "eps {eps:.2}: exact {:.4e}, MC {:.4e} +- {:.1e} ({z:+.2} SE)",
            exact.mse, mc.stats.mse, mc.mse_se
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("exact_vs_monte_carlo failed");
}
