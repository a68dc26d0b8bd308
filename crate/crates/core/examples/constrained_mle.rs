// Raw and crosstalk-aware estimates for a handful of count records, including the
// boundary cases where the closed form clamps.

use superres::estimators::{mle_closed_form, mle_grid, raw_estimator, CountRecord, GridOptions};
use superres::model::CrosstalkMatrix;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let xt = CrosstalkMatrix::calibrated();
    let records = [
        CountRecord::new(99_000, 1_000),
        CountRecord::new(99_900, 100),
        CountRecord::new(99_990, 10),
        CountRecord::new(50_000, 50_000),
    ];
    for c in records {
        let raw = raw_estimator(&c)?;
        let closed = mle_closed_form(&c, &xt)?;
        let grid = mle_grid(&c, &xt, &GridOptions::default())?;
        println!(
            "n0 {:>6} n1 {:>6}: raw {:.5}  mle {:.5}{}  grid {:.5}",
            c.n0,
            c.n1,
            raw.value,
            closed.value,
            if closed.out_of_range { " (clamped)" } else { "" },
            grid.value,
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("constrained_mle failed");
}
