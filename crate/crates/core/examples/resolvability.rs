// PER at a small separation for several photon budgets, and the smallest separation
// each budget resolves.

use superres::model::CrosstalkMatrix;
use superres::statistics::{exact_mse, min_resolvable, per};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let xt = CrosstalkMatrix::calibrated();
    let grid: Vec<f64> = (1..=40).map(|k| k as f64 * 0.025).collect();
    for n in [2_000u64, 10_000, 100_000] {
        let p = per(&exact_mse(0.05, n, &xt)?);
        let r = min_resolvable(n, &xt, &grid)?;
        match r.epsilon() {
            Some(eps) => println!("N {n:>6}: PER(0.05) {:+.2} dB, resolves from eps = {eps:.3}", p.db),
            None => println!("N {n:>6}: PER(0.05) {:+.2} dB, nothing on the grid resolves", p.db),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("resolvability failed");
}
