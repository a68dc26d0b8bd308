// Fisher information of HG mode filtering against direct intensity detection, and the
// resulting Cramér–Rao bounds for a fixed photon budget.

use superres::information::{crlb, fi_direct, fi_hg_full, fi_two_mode_exact, superres_param};
use superres::model::CrosstalkMatrix;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let xt = CrosstalkMatrix::calibrated();
    let n = 1e4;
    println!("{:>6} {:>8} {:>10} {:>10} {:>12}", "eps", "F_HG", "F_DI", "F_xt", "CRLB(N=1e4)");
    for eps in [0.0, 0.05, 0.1, 0.2, 0.5, 1.0] {
        let hg = fi_hg_full(eps, None)?;
        let di = fi_direct(eps)?;
        let two = fi_two_mode_exact(eps, &xt)?;
        let bound = crlb(eps, n, two, None)?;
        println!(
            "{eps:>6.2} {:>8.4} {:>10.3e} {:>10.3e} {:>12.3e}",
            hg.value, di.value, two.value, bound.crlb_unbiased
        );
    }
    let s = superres_param(&xt)?;
    println!("superresolution parameter s = {:.2} (closed form {:.2})", s.value, s.analytic);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("fisher_bounds failed");
}
