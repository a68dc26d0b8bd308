// Storage, retrieval and total efficiencies of a memory run, and background
// subtraction of retrieved counts.

use superres::estimators::CountRecord;
use superres::statistics::{memory_efficiencies, subtract_noise, EfficiencyRecord};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let e = memory_efficiencies(&EfficiencyRecord { n_in: 1.0e6, n_tran: 0.35e6, n_out: 0.16e6 })?;
    println!("storage {:.3}, retrieval {:.3}, total {:.3}", e.storage, e.retrieval, e.total);

    let signal = CountRecord::new(98_500, 1_540);
    let noise = CountRecord::new(30, 25);
    let corrected = subtract_noise(&signal, &noise);
    println!("corrected counts {:?}, clamped {}", corrected.counts, corrected.clamped);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("memory_efficiency failed");
}
