//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero if any
//! criterion fails or overruns its time budget.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use superres::calibration::{fit_crosstalk, reference_grid, CalibrationDataset};
use superres::estimators::{mle_closed_form, mle_grid, raw_estimator, CountRecord, GridOptions};
use superres::information::{
    crlb, fi_direct, fi_hg_full, fi_two_mode_exact, superres_param, QUANTUM_FISHER,
};
use superres::model::{
    hg_mode_distribution, intensity_spectrum, perturbed_probs, CrosstalkMatrix, LinePair,
};
use superres::pulse::{
    apply_response, correct_waveform, estimate_response, hg_waveform, normalized_intensity_deviation,
    relative_l2, GridSpec, HgOrder, ResponseSpectrum, Waveform,
};
use superres::quadrature::adaptive_simpson;
use superres::statistics::{exact_mse, mc_error_stats, min_resolvable, per, EstimatorKind, SamplingConfig};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn calibrated() -> CrosstalkMatrix {
    CrosstalkMatrix::new(0.9966, 1.0).unwrap()
}

fn quantum_limit() -> Check {
    let mut worst: f64 = 0.0;
    for eps in [0.0, 0.1, 0.5, 1.0, 2.0, 4.0] {
        let v = e(fi_hg_full(eps, None))?.value;
        worst = worst.max((v - QUANTUM_FISHER).abs());
        ensure((v - 0.25).abs() <= 1e-6, format!("F_HG({eps}) = {v}"))?;
    }
    Ok(format!("max |F_HG - 0.25| = {worst:.1e}"))
}

fn direct_small_separation() -> Check {
    let eps = 1e-2;
    let c = e(fi_direct(eps))?.value / (eps * eps);
    let zero = e(fi_direct(0.0))?.value;
    ensure((c - 0.125).abs() <= 1e-3, format!("F_DI(0.01)/0.01^2 = {c}"))?;
    ensure(zero == 0.0, format!("F_DI(0) = {zero}"))?;
    Ok(format!("F_DI(0.01)/eps^2 = {c:.6}, F_DI(0) = {zero}"))
}

fn superresolution_parameter() -> Check {
    let s = e(superres_param(&calibrated()))?;
    ensure((35.0..=39.0).contains(&s.value), format!("s = {}", s.value))?;
    ensure(s.converged, format!("s not converged: relative change {}", s.relative_change))?;
    Ok(format!("s = {:.3} (closed form {:.3})", s.value, s.analytic))
}

fn enhancement_at_005() -> Check {
    let xt = calibrated();
    let r = e(fi_two_mode_exact(0.05, &xt))?.value / e(fi_direct(0.05))?.value;
    ensure((31.0..=39.0).contains(&r), format!("ratio = {r}"))?;
    Ok(format!("F/F_DI at eps = 0.05: {r:.3}"))
}

fn estimator_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_identity: f64 = 0.0;
    for _ in 0..1000 {
        let n0 = rng.random_range(1..=1_000_000u64);
        let n1 = rng.random_range(0..=n0);
        let c = CountRecord::new(n0, n1);
        let raw = e(raw_estimator(&c))?.value;
        let mle = e(mle_closed_form(&c, &CrosstalkMatrix::ideal()))?.value;
        worst_identity = worst_identity.max((raw - mle).abs());
        ensure((raw - mle).abs() <= 1e-12, format!("raw {raw} vs mle {mle} at {c:?}"))?;
    }
    let grid = GridOptions::default();
    let tol = 2.0 * grid.resolution;
    let mut worst_grid: f64 = 0.0;
    let mut in_range = 0;
    for xt in [CrosstalkMatrix::ideal(), calibrated(), CrosstalkMatrix::new(0.98, 0.99).unwrap()] {
        for _ in 0..1000 {
            let n = rng.random_range(100..=200_000u64);
            let n1 = rng.random_range(0..=n / 4);
            let c = CountRecord::new(n - n1, n1);
            let closed = e(mle_closed_form(&c, &xt))?;
            if closed.out_of_range || closed.value > grid.eps_max {
                continue;
            }
            in_range += 1;
            let g = e(mle_grid(&c, &xt, &grid))?.value;
            worst_grid = worst_grid.max((g - closed.value).abs());
            ensure((g - closed.value).abs() <= tol, format!("grid {g} vs closed {} at {c:?}", closed.value))?;
        }
    }
    Ok(format!(
        "max |raw - mle| = {worst_identity:.1e}; {in_range} in-range grid cases, max gap {worst_grid:.1e} (limit {tol:.0e})"
    ))
}

fn exact_vs_monte_carlo() -> Check {
    let xt = calibrated();
    let mut worst: f64 = 0.0;
    for (i, &eps) in [0.05, 0.2, 1.0].iter().enumerate() {
        for (j, &n) in [2_000u64, 10_000, 100_000].iter().enumerate() {
            let exact = e(exact_mse(eps, n, &xt))?;
            let cfg = SamplingConfig::new(n, 1000 + (3 * i + j) as u64, 100_000);
            let mc = e(mc_error_stats(eps, &xt, &cfg, &EstimatorKind::mle_closed()))?;
            let z = (mc.stats.mse - exact.mse).abs() / mc.mse_se;
            worst = worst.max(z);
            ensure(z <= 3.0, format!("eps {eps}, N {n}: exact {} vs MC {} ({z:.2} SE)", exact.mse, mc.stats.mse))?;
        }
    }
    Ok(format!("9 cells, largest deviation {worst:.2} SE"))
}

fn per_thresholds() -> Check {
    let xt = calibrated();
    let db = |n: u64| -> Result<f64, String> { Ok(per(&e(exact_mse(0.05, n, &xt))?).db) };
    let (a, b, c) = (db(100_000)?, db(2_000)?, db(10_000)?);
    ensure(a > 0.0, format!("PER(0.05, 1e5) = {a} dB"))?;
    ensure(b < 0.0, format!("PER(0.05, 2e3) = {b} dB"))?;
    ensure(c < 0.0, format!("PER(0.05, 1e4) = {c} dB"))?;
    let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 0.05).collect();
    let r = e(min_resolvable(100_000, &xt, &grid))?.epsilon();
    ensure(r == Some(grid[0]), format!("min resolvable at 1e5 = {r:?}"))?;
    Ok(format!("PER(0.05): 1e5 {a:.2} dB, 1e4 {c:.2} dB, 2e3 {b:.2} dB; min resolvable(1e5) = 0.05"))
}

fn bias_structure() -> Check {
    let xt = calibrated();
    let grid: Vec<f64> = (1..=30).map(|k| k as f64 * 0.01).collect();
    let mut crossings = Vec::new();
    for n in [2_000u64, 10_000] {
        let above: Vec<bool> = grid
            .iter()
            .map(|&eps| -> Result<bool, String> {
                let mse = e(exact_mse(eps, n, &xt))?.mse;
                let bound = e(crlb(eps, n as f64, e(fi_two_mode_exact(eps, &xt))?, None))?.crlb_unbiased;
                Ok(mse > bound)
            })
            .collect::<Result<_, _>>()?;
        let first = above.iter().position(|&a| a);
        let Some(k) = first else { return Err(format!("N {n}: MSE never exceeds the CRLB")) };
        ensure(k > 0, format!("N {n}: MSE already exceeds the CRLB at eps = {}", grid[0]))?;
        ensure(above[k..].iter().all(|&a| a), format!("N {n}: MSE/CRLB ordering is not a single crossing"))?;
        crossings.push(format!("N {n}: crossing between {:.2} and {:.2}", grid[k - 1], grid[k]));
    }
    let b = |n: u64| -> Result<f64, String> { Ok(e(exact_mse(0.0, n, &xt))?.bias) };
    let (b2, b4, b5) = (b(2_000)?, b(10_000)?, b(100_000)?);
    ensure(b2 > 0.0 && b4 > 0.0 && b5 > 0.0, format!("b(0, N) = {b2}, {b4}, {b5}"))?;
    ensure(b5 < b2, format!("b(0, 1e5) = {b5} not below b(0, 2e3) = {b2}"))?;
    Ok(format!("{}; b(0, N) = {b2:.4}, {b4:.4}, {b5:.4}", crossings.join("; ")))
}

fn asymptotic_efficiency() -> Check {
    let xt = calibrated();
    let n = 1_000_000u64;
    let v = e(exact_mse(0.5, n, &xt))?.mse * n as f64 * e(fi_two_mode_exact(0.5, &xt))?.value;
    ensure((0.98..=1.02).contains(&v), format!("N F MSE = {v}"))?;
    Ok(format!("N F MSE at eps = 0.5, N = 1e6: {v:.4}"))
}

fn calibration_round_trip() -> Check {
    let truth = CrosstalkMatrix::new(0.9966, 0.999).unwrap();
    let clean = e(CalibrationDataset::noiseless(&truth, &reference_grid(), 1.6e5))?;
    let fit = e(fit_crosstalk(&clean))?.crosstalk;
    let da = (fit.alpha() - truth.alpha()).abs();
    let db = (fit.beta() - truth.beta()).abs();
    ensure(da <= 1e-6 && db <= 1e-6, format!("noiseless fit ({}, {})", fit.alpha(), fit.beta()))?;
    let xt = calibrated();
    let mut hits = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let data = e(CalibrationDataset::sampled(&xt, &reference_grid(), 160_000, seed))?;
        let a = e(fit_crosstalk(&data))?.crosstalk.alpha();
        worst = worst.max((a - xt.alpha()).abs());
        if (a - xt.alpha()).abs() < 5e-4 {
            hits += 1;
        }
    }
    ensure(hits >= 95, format!("{hits}/100 Poisson fits within 5e-4"))?;
    Ok(format!("noiseless error ({da:.1e}, {db:.1e}); {hits}/100 Poisson fits within 5e-4, worst {worst:.1e}"))
}

fn pulse_predistortion() -> Check {
    let (dt, len) = (0.5e-9, 2048);
    let grid = GridSpec::centered(dt, len);
    let target = e(hg_waveform(HgOrder::Hg1, 0.0, 50e-9, 1.0, grid))?.waveform;
    let chain = e(ResponseSpectrum::low_pass(len, dt, 2.0 * std::f64::consts::PI * 100e6))?;
    let raw = e(normalized_intensity_deviation(&e(apply_response(&target, &chain))?, &target))?;
    let probe = e(hg_waveform(HgOrder::Hg0, 0.0, 2e-9, 1.0, grid))?.waveform;
    let measured = e(estimate_response(&probe, &e(apply_response(&probe, &chain))?))?;
    let drive = e(correct_waveform(&target, &measured))?;
    let out = e(apply_response(&drive, &chain))?;
    let fixed = e(normalized_intensity_deviation(&out, &target))?;
    ensure(raw > 0.02, format!("uncorrected deviation {raw}"))?;
    ensure(fixed < 0.02, format!("corrected deviation {fixed}"))?;

    let id = e(ResponseSpectrum::identity(len, dt))?;
    let same = e(correct_waveform(&target, &id))?;
    let id_err = same.samples().iter().zip(target.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    ensure(id_err < 1e-14, format!("identity correction error {id_err}"))?;
    let shift = 40;
    let delay = e(ResponseSpectrum::delay(len, dt, shift as f64 * dt))?;
    let advanced = e(correct_waveform(&target, &delay))?;
    let delay_err = (0..len)
        .map(|j| (advanced.samples()[j] - target.samples()[(j + shift) % len]).norm())
        .fold(0.0, f64::max);
    ensure(delay_err < 1e-12, format!("delay correction error {delay_err}"))?;

    // well-conditioned synthetic response, |R| in [0.1, 10]
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let values: Vec<Complex64> = (0..len)
        .map(|_| Complex64::from_polar(10f64.powf(rng.random_range(-1.0..1.0)), rng.random_range(-3.0..3.0)))
        .collect();
    let r = e(ResponseSpectrum::new(values, vec![false; len], dt, 0.0))?;
    let noise: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    let h = e(Waveform::from_real(&noise, dt, grid.t0))?;
    let l2 = e(relative_l2(&e(apply_response(&e(correct_waveform(&h, &r))?, &r))?, &h))?;
    ensure(l2 < 1e-6, format!("round trip L2 {l2}"))?;
    Ok(format!(
        "HG1 deviation {:.2}% uncorrected, {:.1e}% corrected; identity {id_err:.0e}, delay {delay_err:.0e}, round trip {l2:.1e}",
        100.0 * raw,
        100.0 * fixed
    ))
}

fn normalization() -> Check {
    let mut worst_s: f64 = 0.0;
    let mut worst_hg: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    for k in 0..=80 {
        let eps = k as f64 * 0.05;
        let scene = e(LinePair::dimensionless(eps))?;
        let half = 10.0 + eps;
        let s = e(adaptive_simpson(|w| intensity_spectrum(w, &scene), -half, half, 1e-10))?.value;
        worst_s = worst_s.max((s - 1.0).abs());
        let d = e(hg_mode_distribution(eps))?;
        ensure(d.probs.iter().all(|p| (0.0..=1.0).contains(p)), format!("P(n|{eps}) outside [0, 1]"))?;
        worst_hg = worst_hg.max((d.total() - 1.0).abs());
        for xt in [calibrated(), CrosstalkMatrix::new(0.97, 0.985).unwrap(), CrosstalkMatrix::ideal()] {
            let p = perturbed_probs(eps, &xt);
            ensure((0.0..=1.0).contains(&p.p0) && (0.0..=1.0).contains(&p.p1), format!("p outside [0, 1] at {eps}"))?;
            worst_p = worst_p.max((p.p0 + p.p1 - 1.0).abs());
        }
    }
    ensure(worst_s <= 1e-10, format!("|int S - 1| = {worst_s}"))?;
    ensure(worst_hg <= 1e-12, format!("|sum P - 1| = {worst_hg}"))?;
    ensure(worst_p <= 1e-12, format!("|p0 + p1 - 1| = {worst_p}"))?;
    Ok(format!("eps in [0, 4]: |int S - 1| {worst_s:.1e}, |sum P - 1| {worst_hg:.1e}, |p0 + p1 - 1| {worst_p:.1e}"))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 12] = [
        ("quantum-limit constancy", Duration::from_secs(1), quantum_limit),
        ("direct-intensity small-separation law", Duration::from_secs(1), direct_small_separation),
        ("superresolution parameter", Duration::from_secs(1), superresolution_parameter),
        ("precision-enhancement curve", Duration::from_secs(1), enhancement_at_005),
        ("estimator identity", Duration::from_secs(10), estimator_identity),
        ("exact vs Monte Carlo MSE", Duration::from_secs(120), exact_vs_monte_carlo),
        ("PER thresholds", Duration::from_secs(10), per_thresholds),
        ("bias structure", Duration::from_secs(30), bias_structure),
        ("asymptotic efficiency", Duration::from_secs(5), asymptotic_efficiency),
        ("calibration round trip", Duration::from_secs(60), calibration_round_trip),
        ("pulse predistortion", Duration::from_secs(5), pulse_predistortion),
        ("probability normalization", Duration::from_secs(5), normalization),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= *budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.2}s / {}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
