// Predistorts an HG1 control pulse for a band-limited drive chain and checks the
// delivered intensity profile.

use superres::pulse::{
    apply_response, correct_waveform, estimate_response, hg_waveform, normalized_intensity_deviation,
    GridSpec, HgOrder, ResponseSpectrum,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (dt, len) = (0.1e-9, 1024);
    let grid = GridSpec::centered(dt, len);
    let target = hg_waveform(HgOrder::Hg1, 0.0, 2e-9, 1.0, grid)?.waveform;
    let chain = ResponseSpectrum::low_pass(len, dt, 2.0 * std::f64::consts::PI * 100e6)?;

    let probe = hg_waveform(HgOrder::Hg0, 0.0, 0.5e-9, 1.0, grid)?.waveform;
    let measured = estimate_response(&probe, &apply_response(&probe, &chain)?)?;

    let plain = apply_response(&target, &chain)?;
    let drive = correct_waveform(&target, &measured)?;
    let delivered = apply_response(&drive, &chain)?;
    println!("uncorrected deviation {:.2}%", 100.0 * normalized_intensity_deviation(&plain, &target)?);
    println!("corrected deviation   {:.2e}%", 100.0 * normalized_intensity_deviation(&delivered, &target)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("pulse_predistortion failed");
}
