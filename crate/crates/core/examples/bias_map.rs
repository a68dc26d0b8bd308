// Exact MSE of the constrained estimator against the unbiased and bias-corrected
// bounds, showing where the estimator beats the naive bound at small separations.

use superres::information::{crlb, fi_two_mode_exact};
use superres::model::CrosstalkMatrix;
use superres::statistics::{exact_bias_profile, exact_mse};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let xt = CrosstalkMatrix::calibrated();
    let n = 2_000;
    let grid: Vec<f64> = (0..=12).map(|k| k as f64 * 0.025).collect();
    let profile = exact_bias_profile(&grid, n, &xt)?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "eps", "bias", "mse", "crlb", "crlb_b");
    for p in profile {
        let mse = exact_mse(p.epsilon, n, &xt)?.mse;
        let fi = fi_two_mode_exact(p.epsilon, &xt)?;
        let b = crlb(p.epsilon, n as f64, fi, Some((p.bias, p.bias_slope)))?;
        println!(
            "{:>6.3} {:>10.4} {:>10.3e} {:>10.3e} {:>10.3e}",
            p.epsilon, p.bias, mse, b.crlb_unbiased, b.crlb_biased
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("bias_map failed");
}
