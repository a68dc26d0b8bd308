// Bootstrap MSE from a recorded pool of detections, comparing the raw estimator with
// the crosstalk-aware MLE on the same resamples.

use superres::estimators::CountRecord;
use superres::model::{perturbed_probs, CrosstalkMatrix};
use superres::statistics::{bootstrap_mse, exact_mse, BootstrapConfig, EstimatorKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let xt = CrosstalkMatrix::calibrated();
    let eps = 0.3;
    let total = 400_000u64;
    let n1 = (perturbed_probs(eps, &xt).p1 * total as f64).round() as u64;
    let pool = CountRecord::new(total - n1, n1);
    let cfg = BootstrapConfig { reps: 200, outer: 10, seed: 3 };
    for n in [2_000u64, 10_000, 100_000] {
        let raw = bootstrap_mse(&pool, n, eps, &xt, &EstimatorKind::Raw, &cfg)?;
        let mle = bootstrap_mse(&pool, n, eps, &xt, &EstimatorKind::mle_closed(), &cfg)?;
        let exact = exact_mse(eps, n, &xt)?.mse;
        println!(
            "N {n:>6}: raw {:.3e}  mle {:.3e} +- {:.1e}  exact {:.3e}",
            raw.mse_mean, mle.mse_mean, mle.mse_sd, exact
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("bootstrap_experiment failed");
}
