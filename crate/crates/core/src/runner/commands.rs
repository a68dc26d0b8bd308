use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::config::{sha256_file, RunConfig};
use super::data::{aggregate, read_counts_path, simulate_counts, CountsRow};
use super::table::{Cell, Column, ColumnFormat as F, InputFile, ResultTable, TableMeta};
use super::RunError;
use crate::calibration::{calibration_report, fit_crosstalk, CalibrationDataset, CalibrationRow};
use crate::estimators::{mle_closed_form_with_ceiling, mle_grid, raw_estimator, Estimate, DEFAULT_CEILING};
use crate::information::{
    crlb, fi_direct, fi_direct_coefficient, fi_hg_full, fi_two_mode_approx, fi_two_mode_exact,
    superres_param,
};
use crate::model::CrosstalkMatrix;
use crate::pulse::{correct_waveform, estimate_response, ResponseSpectrum, Waveform};
use crate::statistics::{
    bootstrap_mse, exact_bias_profile, exact_mse_with_ceiling, mc_error_stats, min_resolvable, per,
    EstimatorKind, SamplingConfig,
};

/// Seed for the `index`-th independent cell of a command.
pub fn cell_seed(seed: u64, index: u64) -> u64 {
    seed ^ (index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn columns(spec: &[(&str, F)]) -> Vec<Column> {
    spec.iter().map(|(n, f)| Column::new(*n, *f)).collect()
}

fn ceiling(cfg: &RunConfig) -> f64 {
    match cfg.estimator {
        EstimatorKind::MleClosed { ceiling } => ceiling,
        _ => DEFAULT_CEILING,
    }
}

/// The MLE used for the `mle` columns: the configured estimator unless it is the raw one.
fn mle_kind(cfg: &RunConfig) -> EstimatorKind {
    match cfg.estimator {
        EstimatorKind::Raw => EstimatorKind::mle_closed(),
        other => other,
    }
}

fn mle_estimate(kind: &EstimatorKind, counts: &crate::estimators::CountRecord, xt: &CrosstalkMatrix) -> crate::Result<Estimate> {
    match kind {
        EstimatorKind::MleGrid { grid } => mle_grid(counts, xt, grid),
        EstimatorKind::MleClosed { ceiling } => mle_closed_form_with_ceiling(counts, xt, *ceiling),
        EstimatorKind::Raw => raw_estimator(counts),
    }
}

fn add_input(meta: &mut TableMeta, path: &Path) -> Result<(), RunError> {
    meta.inputs.push(InputFile { path: path.display().to_string(), sha256: sha256_file(path)? });
    Ok(())
}

fn inv(x: f64) -> f64 {
    if x == 0.0 {
        f64::INFINITY
    } else {
        1.0 / x
    }
}

/// Information per photon and the photon-normalized Cramér–Rao bounds `N * CRLB = 1/F`.
pub fn cmd_fisher(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let xt = cfg.crosstalk_matrix()?;
    let mut t = ResultTable::new(
        columns(&[
            ("epsilon", F::Epsilon),
            ("fi_direct", F::Float),
            ("fi_hg", F::Float),
            ("fi_two_mode", F::Float),
            ("fi_two_mode_approx", F::Float),
            ("crlb_direct_x_n", F::Float),
            ("crlb_quantum_x_n", F::Float),
            ("crlb_two_mode_x_n", F::Float),
        ]),
        TableMeta::new("fisher", cfg),
    );
    for eps in cfg.epsilon.points() {
        let di = fi_direct(eps)?.value;
        let hg = fi_hg_full(eps, None)?.value;
        let two = fi_two_mode_exact(eps, &xt)?.value;
        let approx = fi_two_mode_approx(eps, xt.alpha())?.value;
        t.push(vec![eps.into(), di.into(), hg.into(), two.into(), approx.into(), inv(di).into(), inv(hg).into(), inv(two).into()]);
    }
    t.meta.summarize("crosstalk", xt);
    Ok(t)
}

/// Exact and Monte Carlo MSE, both scaled by `N`, against `1/F`.
pub fn cmd_mse_scan(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let xt = cfg.crosstalk_matrix()?;
    let mut t = ResultTable::new(
        columns(&[
            ("n_photons", F::Integer),
            ("epsilon", F::Epsilon),
            ("exact_mse_x_n", F::Float),
            ("exact_bias", F::Float),
            ("mc_mse_x_n", F::Float),
            ("mc_mse_se_x_n", F::Float),
            ("mc_bias", F::Float),
            ("mc_bias_se", F::Float),
            ("crlb_x_n", F::Float),
            ("valid_trials", F::Integer),
            ("invalid_trials", F::Integer),
            ("warnings", F::Text),
        ]),
        TableMeta::new("mse-scan", cfg),
    );
    let mut cell = 0;
    for &n in &cfg.photons {
        let nf = n as f64;
        for eps in cfg.epsilon.points() {
            let exact = exact_mse_with_ceiling(eps, n, &xt, ceiling(cfg))?;
            let sampling = SamplingConfig {
                mode: cfg.monte_carlo.mode,
                n_photons: n,
                seed: cell_seed(cfg.seed, cell),
                trials: cfg.monte_carlo.trials,
            };
            cell += 1;
            let mc = mc_error_stats(eps, &xt, &sampling, &cfg.estimator)?;
            let mut warnings = Vec::new();
            if mc.invalid_warning {
                warnings.push("invalid_trials");
            }
            if mc.clamped_trials > 0 {
                warnings.push("clamped_draws");
            }
            let fi = fi_two_mode_exact(eps, &xt)?.value;
            t.push(vec![
                n.into(),
                eps.into(),
                (exact.mse * nf).into(),
                exact.bias.into(),
                (mc.stats.mse * nf).into(),
                (mc.mse_se * nf).into(),
                mc.stats.bias.into(),
                mc.bias_se.into(),
                inv(fi).into(),
                mc.valid_trials.into(),
                mc.invalid_trials.into(),
                warnings.join(";").into(),
            ]);
        }
    }
    t.meta.summarize("exact_estimator", "mle_closed");
    t.meta.summarize("mc_estimator", cfg.estimator);
    Ok(t)
}

/// Parameter-to-error ratio from the exact MSE, with the smallest resolvable separation.
pub fn cmd_per(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let xt = cfg.crosstalk_matrix()?;
    let mut t = ResultTable::new(
        columns(&[
            ("n_photons", F::Integer),
            ("epsilon", F::Epsilon),
            ("mse", F::Float),
            ("per_linear", F::Float),
            ("per_db", F::Decibel),
            ("resolves", F::Flag),
        ]),
        TableMeta::new("per", cfg),
    );
    let grid = cfg.epsilon.points();
    let positive: Vec<f64> = grid.iter().copied().filter(|&e| e > 0.0).collect();
    let mut resolvable = BTreeMap::new();
    for &n in &cfg.photons {
        for &eps in &grid {
            let stats = exact_mse_with_ceiling(eps, n, &xt, ceiling(cfg))?;
            let p = per(&stats);
            t.push(vec![n.into(), eps.into(), stats.mse.into(), p.linear.into(), p.db.into(), p.resolves().into()]);
        }
        let r = if positive.is_empty() { None } else { min_resolvable(n, &xt, &positive)?.epsilon() };
        resolvable.insert(n.to_string(), r);
    }
    t.meta.summarize("min_resolvable", resolvable);
    Ok(t)
}

/// Information ratio against direct intensity detection, and the realized ratio
/// `CRLB_DI / MSE` for each photon budget.
pub fn cmd_enhance(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let xt = cfg.crosstalk_matrix()?;
    let mut spec = vec![
        ("epsilon".to_string(), F::Epsilon),
        ("fi_two_mode".to_string(), F::Float),
        ("fi_direct".to_string(), F::Float),
        ("fi_ratio".to_string(), F::Float),
    ];
    spec.extend(cfg.photons.iter().map(|n| (format!("mse_ratio_n{n}"), F::Float)));
    let cols = spec.into_iter().map(|(n, f)| Column::new(n, f)).collect();
    let mut t = ResultTable::new(cols, TableMeta::new("enhance", cfg));
    let s = superres_param(&xt)?;
    for eps in cfg.epsilon.points() {
        let two = fi_two_mode_exact(eps, &xt)?.value;
        let di = fi_direct(eps)?.value;
        let ratio = if eps == 0.0 {
            // both vanish as eps^2; the ratio tends to s
            if s.divergent {
                f64::INFINITY
            } else {
                let c = xt.contrast();
                c * c / (64.0 * xt.alpha() * (1.0 - xt.alpha())) / fi_direct_coefficient(0.0)?
            }
        } else {
            two / di
        };
        let mut row: Vec<Cell> = vec![eps.into(), two.into(), di.into(), ratio.into()];
        for &n in &cfg.photons {
            let mse = exact_mse_with_ceiling(eps, n, &xt, ceiling(cfg))?.mse;
            row.push((inv(n as f64 * di) / mse).into());
        }
        t.push(row);
    }
    t.meta.summarize("superresolution", s);
    t.meta.summarize("divergent", s.divergent);
    if s.divergent {
        t.meta.warnings.push("ideal HG0 channel: the information ratio diverges as epsilon -> 0".into());
    }
    Ok(t)
}

/// Exact MSE against the unbiased and bias-corrected bounds over an `(epsilon, N)` grid.
pub fn cmd_bias_map(cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let xt = cfg.crosstalk_matrix()?;
    let mut t = ResultTable::new(
        columns(&[
            ("n_photons", F::Integer),
            ("epsilon", F::Epsilon),
            ("exact_mse", F::Float),
            ("bias", F::Float),
            ("bias_slope", F::Float),
            ("crlb_unbiased", F::Float),
            ("crlb_biased", F::Float),
            ("crlb_minus_mse", F::Float),
            ("mse_below_crlb", F::Flag),
        ]),
        TableMeta::new("bias-map", cfg),
    );
    let grid = cfg.bias_map.epsilon.points();
    if grid.len() < 2 {
        return Err(RunError::Config("bias_map.epsilon needs at least two points".into()));
    }
    let mut sign_change = BTreeMap::new();
    for &n in &cfg.bias_map.photons {
        let profile = exact_bias_profile(&grid, n, &xt)?;
        let mut signs = Vec::new();
        for bp in profile {
            let mse = exact_mse_with_ceiling(bp.epsilon, n, &xt, ceiling(cfg))?.mse;
            let fi = fi_two_mode_exact(bp.epsilon, &xt)?;
            let bound = crlb(bp.epsilon, n as f64, fi, Some((bp.bias, bp.bias_slope)))?;
            let diff = bound.crlb_unbiased - mse;
            signs.push(diff > 0.0);
            t.push(vec![
                n.into(),
                bp.epsilon.into(),
                mse.into(),
                bp.bias.into(),
                bp.bias_slope.into(),
                bound.crlb_unbiased.into(),
                bound.crlb_biased.into(),
                diff.into(),
                (diff > 0.0).into(),
            ]);
        }
        sign_change.insert(n.to_string(), signs.windows(2).any(|w| w[0] != w[1]));
    }
    t.meta.summarize("sign_change", sign_change);
    Ok(t)
}

/// Synthetic counts dataset with its metadata.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(Vec<CountsRow>, TableMeta), RunError> {
    let xt = cfg.crosstalk_matrix()?;
    let rows = simulate_counts(&cfg.simulate, &xt, cfg.seed);
    let mut meta = TableMeta::new("simulate", cfg);
    meta.columns = columns(&[
        ("epsilon_true", F::Float),
        ("phase", F::Float),
        ("control_mode", F::Text),
        ("retrieved_counts", F::Integer),
        ("noise_counts", F::Integer),
    ]);
    meta.summarize("rows", rows.len());
    Ok((rows, meta))
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Spread {
    mean: f64,
    sd: f64,
    mse: f64,
    mse_sd: f64,
}

/// Point estimates and bootstrap spreads from a counts dataset.
///
/// Background is subtracted per phase, phases are summed, and for every photon budget
/// not exceeding the pooled counts the raw and MLE estimators are bootstrapped from
/// the pooled detections with identical resamples.
pub fn cmd_estimate(data_path: &Path, cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let xt = cfg.crosstalk_matrix()?;
    let points = aggregate(&read_counts_path(data_path)?)?;
    let mut meta = TableMeta::new("estimate", cfg);
    add_input(&mut meta, data_path)?;
    let mut t = ResultTable::new(
        columns(&[
            ("epsilon_true", F::Epsilon),
            ("phases", F::Integer),
            ("n0", F::Integer),
            ("n1", F::Integer),
            ("raw", F::Float),
            ("mle", F::Float),
            ("n_photons", F::Integer),
            ("raw_boot_mean", F::Float),
            ("raw_boot_sd", F::Float),
            ("raw_mse", F::Float),
            ("mle_boot_mean", F::Float),
            ("mle_boot_sd", F::Float),
            ("mle_mse", F::Float),
            ("mle_mse_sd", F::Float),
            ("mle_per_db", F::Decibel),
            ("warnings", F::Text),
        ]),
        meta,
    );
    let mle = mle_kind(cfg);
    let mut cell = 0;
    for p in &points {
        let mut base_warn = Vec::new();
        if p.clamped {
            base_warn.push("noise_clamped");
        }
        let raw = raw_estimator(&p.counts).ok();
        if raw.is_none() {
            base_warn.push("raw_undefined");
        }
        let m = mle_estimate(&mle, &p.counts, &xt).ok();
        match m {
            None => base_warn.push("mle_undefined"),
            Some(e) if e.out_of_range => base_warn.push("out_of_range"),
            Some(e) if e.at_boundary => base_warn.push("at_boundary"),
            _ => {}
        }
        for &n in &cfg.photons {
            let mut warn = base_warn.clone();
            let boot_cfg = cfg.bootstrap_config(cell_seed(cfg.seed, cell));
            cell += 1;
            let run = |kind: &EstimatorKind, warn: &mut Vec<&'static str>, tag: &'static str| -> Option<Spread> {
                match bootstrap_mse(&p.counts, n, p.epsilon, &xt, kind, &boot_cfg) {
                    Ok(b) => Some(Spread { mean: b.estimate_mean, sd: b.estimate_sd, mse: b.mse_mean, mse_sd: b.mse_sd }),
                    Err(crate::Error::InsufficientData { .. }) => {
                        if !warn.contains(&"insufficient_counts") {
                            warn.push("insufficient_counts");
                        }
                        None
                    }
                    Err(_) => {
                        warn.push(tag);
                        None
                    }
                }
            };
            let rb = run(&EstimatorKind::Raw, &mut warn, "raw_bootstrap_undefined");
            let mb = run(&mle, &mut warn, "mle_bootstrap_undefined");
            let per_db = mb.map(|b| {
                if b.mse == 0.0 {
                    f64::INFINITY
                } else {
                    10.0 * (p.epsilon * p.epsilon / b.mse).log10()
                }
            });
            t.push(vec![
                p.epsilon.into(),
                p.phases.into(),
                p.counts.n0.into(),
                p.counts.n1.into(),
                raw.map(|e| e.value).into(),
                m.map(|e| e.value).into(),
                n.into(),
                rb.map(|b| b.mean).into(),
                rb.map(|b| b.sd).into(),
                rb.map(|b| b.mse).into(),
                mb.map(|b| b.mean).into(),
                mb.map(|b| b.sd).into(),
                mb.map(|b| b.mse).into(),
                mb.map(|b| b.mse_sd).into(),
                per_db.into(),
                warn.join(";").into(),
            ]);
        }
    }
    t.meta.summarize("mle_estimator", mle);
    t.meta.summarize("separations", points.len());
    Ok(t)
}

/// Fits the crosstalk matrix to a counts dataset with known separations.
pub fn cmd_calibrate(data_path: &Path, cfg: &RunConfig) -> Result<ResultTable, RunError> {
    let points = aggregate(&read_counts_path(data_path)?)?;
    let rows: Vec<CalibrationRow> = points
        .iter()
        .map(|p| CalibrationRow { epsilon: p.epsilon, n0: p.counts.n0 as f64, n1: p.counts.n1 as f64 })
        .collect();
    let photons = rows.iter().map(|r| r.n0 + r.n1).sum::<f64>() / rows.len().max(1) as f64;
    let data = CalibrationDataset::new(rows, photons).map_err(|e| RunError::Data(e.to_string()))?;
    let fit = fit_crosstalk(&data).map_err(|e| RunError::Data(e.to_string()))?;
    let report = calibration_report(&fit, &data)?;
    let mut meta = TableMeta::new("calibrate", cfg);
    add_input(&mut meta, data_path)?;
    let mut t = ResultTable::new(
        columns(&[
            ("epsilon", F::Epsilon),
            ("n0", F::Integer),
            ("n1", F::Integer),
            ("f1", F::Probability),
            ("p1_fit", F::Probability),
            ("residual", F::Float),
        ]),
        meta,
    );
    for (p, r) in points.iter().zip(&report.rows) {
        t.push(vec![p.epsilon.into(), p.counts.n0.into(), p.counts.n1.into(), r.f1.into(), r.p1.into(), r.residual.into()]);
    }
    if fit.flat_cost_warning {
        t.meta.warnings.push("flat cost: the data do not determine an informative device".into());
    }
    if points.iter().any(|p| p.clamped) {
        t.meta.warnings.push("background exceeded signal in some rows; counts clamped at zero".into());
    }
    t.meta.summarize("calibration", &fit);
    t.meta.summarize("report", &report);
    Ok(t)
}

/// Predistorted drive waveform for `target` through the chain described by `response`.
pub fn cmd_pulse_correct(target_path: &Path, response_path: &Path, cfg: &RunConfig) -> Result<(Waveform, TableMeta), RunError> {
    let target = Waveform::read_csv_path(target_path).map_err(|e| RunError::Data(e.to_string()))?;
    let response = ResponseSpectrum::read_csv_path(response_path).map_err(|e| RunError::Data(e.to_string()))?;
    let corrected = correct_waveform(&target, &response)?;
    let mut meta = TableMeta::new("pulse-correct", cfg);
    add_input(&mut meta, target_path)?;
    add_input(&mut meta, response_path)?;
    meta.columns = columns(&[("time_s", F::Float), ("value", F::Float)]);
    meta.summarize("samples", corrected.len());
    meta.summarize("flagged_bins", response.flagged().iter().filter(|&&f| f).count());
    meta.summarize("max_abs_imag", corrected.samples().iter().map(|s| s.im.abs()).fold(0.0, f64::max));
    Ok((corrected, meta))
}

/// Response spectrum estimated from a measured input/output waveform pair.
pub fn cmd_pulse_response(input_path: &Path, output_path: &Path, cfg: &RunConfig) -> Result<(ResponseSpectrum, TableMeta), RunError> {
    let input = Waveform::read_csv_path(input_path).map_err(|e| RunError::Data(e.to_string()))?;
    let output = Waveform::read_csv_path(output_path).map_err(|e| RunError::Data(e.to_string()))?;
    let response = estimate_response(&input, &output)?;
    let mut meta = TableMeta::new("pulse-response", cfg);
    add_input(&mut meta, input_path)?;
    add_input(&mut meta, output_path)?;
    meta.columns = columns(&[
        ("index", F::Integer),
        ("omega_rad_s", F::Float),
        ("re", F::Float),
        ("im", F::Float),
        ("flagged", F::Integer),
    ]);
    meta.summarize("bins", response.len());
    meta.summarize("flagged_bins", response.flagged().iter().filter(|&&f| f).count());
    Ok((response, meta))
}
