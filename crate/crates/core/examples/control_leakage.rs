// How leakage of HG0 into the HG1 channel caps the information gain at small
// separations.

use superres::information::{fi_direct, fi_two_mode_exact, superres_param};
use superres::model::CrosstalkMatrix;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for leak in [1e-4, 1e-3, 3.4e-3, 1e-2, 3e-2] {
        let xt = CrosstalkMatrix::new(1.0 - leak, 1.0)?;
        let s = superres_param(&xt)?;
        let r = fi_two_mode_exact(0.05, &xt)?.value / fi_direct(0.05)?.value;
        println!("leakage {leak:.1e}: s = {:>8.1}, F/F_DI at 0.05 = {r:>6.1}", s.value);
    }
    let ideal = superres_param(&CrosstalkMatrix::ideal())?;
    println!("no leakage: divergent = {}", ideal.divergent);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("control_leakage failed");
}
