// Recovers the crosstalk matrix from Poisson-sampled calibration rows.

use superres::calibration::{calibration_report, fit_crosstalk, reference_grid, CalibrationDataset};
use superres::model::CrosstalkMatrix;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let truth = CrosstalkMatrix::new(0.9966, 0.999)?;
    let data = CalibrationDataset::sampled(&truth, &reference_grid(), 160_000, 42)?;
    let fit = fit_crosstalk(&data)?;
    let report = calibration_report(&fit, &data)?;
    println!(
        "alpha {:.5} (true {:.5}), beta {:.5} (true {:.5}), residual {:.2e}",
        report.alpha,
        truth.alpha(),
        report.beta,
        truth.beta(),
        report.residual
    );
    if let Some(s) = report.superresolution {
        println!("superresolution parameter {:.1}", s.value);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("calibrate_crosstalk failed");
}
