//! Photon-count sampling and estimator error analysis.
//!
//! [`exact_mse`] evaluates the estimator's error as an expectation over the Poisson law of
//! the HG1 count; [`mc_error_stats`] and [`bootstrap_mse`] produce the same quantities by
//! simulation. Every random draw comes from a ChaCha stream keyed by `(seed, trial)`, so
//! results do not depend on how the trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimators::{
    closed_form_value, mle_closed_form_with_ceiling, mle_grid, raw_estimator, CountRecord,
    GridOptions, DEFAULT_CEILING,
};
use crate::model::{perturbed_probs, CrosstalkMatrix};
use crate::special::poisson_support;

/// Poisson mass left out of the exact sums.
pub const POISSON_TAIL: f64 = 1e-12;
/// Invalid-trial fraction above which Monte Carlo results carry a warning.
pub const INVALID_WARNING_FRACTION: f64 = 0.01;

/// Parameter-to-error ratio `epsilon^2 / MSE`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Per {
    pub linear: f64,
    pub db: f64,
    /// The MSE was exactly zero.
    pub infinite: bool,
}

impl Per {
    pub fn resolves(&self) -> bool {
        self.linear > 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub epsilon_true: f64,
    pub n_photons: u64,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub per_linear: f64,
    pub per_db: f64,
}

impl ErrorStats {
    fn from_moments(epsilon_true: f64, n_photons: u64, mean: f64, variance: f64, mse: f64) -> Self {
        let p = per_from(epsilon_true, mse);
        Self {
            epsilon_true,
            n_photons,
            bias: mean - epsilon_true,
            variance,
            mse,
            per_linear: p.linear,
            per_db: p.db,
        }
    }

    pub fn mean_estimate(&self) -> f64 {
        self.epsilon_true + self.bias
    }
}

fn per_from(epsilon: f64, mse: f64) -> Per {
    if mse == 0.0 {
        return Per { linear: f64::INFINITY, db: f64::INFINITY, infinite: true };
    }
    let linear = epsilon * epsilon / mse;
    Per { linear, db: 10.0 * linear.log10(), infinite: false }
}

pub fn per(error: &ErrorStats) -> Per {
    per_from(error.epsilon_true, error.mse)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// `n1 ~ Poisson(p1 N)`, `n0 = N - n1`.
    #[default]
    PoissonCounts,
    /// `n1 ~ Binomial(N, p1)`.
    FixedTotalBinomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub mode: SamplingMode,
    pub n_photons: u64,
    pub seed: u64,
    pub trials: usize,
}

impl SamplingConfig {
    pub fn new(n_photons: u64, seed: u64, trials: usize) -> Self {
        Self { mode: SamplingMode::PoissonCounts, n_photons, seed, trials }
    }

    fn validate(&self) -> Result<()> {
        if self.n_photons == 0 {
            return Err(domain("n_photons must be > 0"));
        }
        if self.trials == 0 {
            return Err(domain("trials must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampledCounts {
    pub counts: CountRecord,
    /// A Poisson draw exceeded the nominal total and `n0` was clamped at zero.
    pub clamped: bool,
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_poisson(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

fn draw_binomial(n: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
    Binomial::new(n, p.clamp(0.0, 1.0)).map(|d| d.sample(rng)).unwrap_or(0)
}

/// Draws one synthetic count record for trial `trial`.
pub fn sample_counts(
    epsilon: f64,
    xt: &CrosstalkMatrix,
    cfg: &SamplingConfig,
    trial: u64,
) -> SampledCounts {
    let p1 = perturbed_probs(epsilon, xt).p1;
    let mut rng = trial_rng(cfg.seed, trial);
    let n = cfg.n_photons;
    match cfg.mode {
        SamplingMode::PoissonCounts => {
            let n1 = draw_poisson(p1 * n as f64, &mut rng);
            SampledCounts { counts: CountRecord::new(n.saturating_sub(n1), n1), clamped: n1 > n }
        }
        SamplingMode::FixedTotalBinomial => {
            let n1 = draw_binomial(n, p1, &mut rng);
            SampledCounts { counts: CountRecord::new(n - n1, n1), clamped: false }
        }
    }
}

/// Exact bias, variance and MSE of the closed-form MLE under `n1 ~ Poisson(p1 N)`.
///
/// Each integer `k` is mapped through the estimator itself: below `(1 - alpha) N` it
/// returns zero, at or above `beta N` the ceiling. The weights are the Poisson pmf,
/// truncated at [`POISSON_TAIL`] and renormalized, so `mse = variance + bias^2` holds to
/// rounding.
pub fn exact_mse(epsilon: f64, n_photons: u64, xt: &CrosstalkMatrix) -> Result<ErrorStats> {
    exact_mse_with_ceiling(epsilon, n_photons, xt, DEFAULT_CEILING)
}

pub fn exact_mse_with_ceiling(
    epsilon: f64,
    n_photons: u64,
    xt: &CrosstalkMatrix,
    ceiling: f64,
) -> Result<ErrorStats> {
    if !(epsilon >= 0.0) {
        return Err(domain(format!("separation must be >= 0, got {epsilon}")));
    }
    if n_photons == 0 {
        return Err(domain("n_photons must be > 0"));
    }
    xt.require_informative()?;
    let n = n_photons as f64;
    let mu = perturbed_probs(epsilon, xt).p1 * n;
    let support: Vec<(f64, f64)> = poisson_support(mu, POISSON_TAIL)
        .into_iter()
        .map(|(k, w)| (closed_form_value(k as f64, n, xt, ceiling).value, w))
        .collect();
    let total: f64 = support.iter().map(|(_, w)| w).sum();
    let mean = support.iter().map(|(e, w)| e * w).sum::<f64>() / total;
    let variance = support.iter().map(|(e, w)| (e - mean).powi(2) * w).sum::<f64>() / total;
    let mse = support.iter().map(|(e, w)| (e - epsilon).powi(2) * w).sum::<f64>() / total;
    Ok(ErrorStats::from_moments(epsilon, n_photons, mean, variance, mse))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasPoint {
    pub epsilon: f64,
    pub bias: f64,
    pub bias_slope: f64,
}

/// Exact bias along an ascending grid, with its slope by finite differences
/// (central inside, one-sided at the ends).
pub fn exact_bias_profile(
    epsilon_grid: &[f64],
    n_photons: u64,
    xt: &CrosstalkMatrix,
) -> Result<Vec<BiasPoint>> {
    if epsilon_grid.len() < 2 {
        return Err(domain("bias slope needs at least two grid points"));
    }
    if epsilon_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("grid must be strictly ascending"));
    }
    let biases = epsilon_grid
        .iter()
        .map(|&e| exact_mse(e, n_photons, xt).map(|s| s.bias))
        .collect::<Result<Vec<_>>>()?;
    let last = epsilon_grid.len() - 1;
    Ok((0..=last)
        .map(|i| {
            let (lo, hi) = match i {
                0 => (0, 1),
                i if i == last => (last - 1, last),
                i => (i - 1, i + 1),
            };
            let slope = (biases[hi] - biases[lo]) / (epsilon_grid[hi] - epsilon_grid[lo]);
            BiasPoint { epsilon: epsilon_grid[i], bias: biases[i], bias_slope: slope }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorKind {
    Raw,
    MleClosed {
        #[serde(default = "default_ceiling")]
        ceiling: f64,
    },
    MleGrid {
        #[serde(flatten)]
        grid: GridOptions,
    },
}

fn default_ceiling() -> f64 {
    DEFAULT_CEILING
}

impl EstimatorKind {
    pub fn mle_closed() -> Self {
        EstimatorKind::MleClosed { ceiling: DEFAULT_CEILING }
    }

    pub fn estimate(&self, counts: &CountRecord, xt: &CrosstalkMatrix) -> Result<f64> {
        Ok(match self {
            EstimatorKind::Raw => raw_estimator(counts)?.value,
            EstimatorKind::MleClosed { ceiling } => {
                mle_closed_form_with_ceiling(counts, xt, *ceiling)?.value
            }
            EstimatorKind::MleGrid { grid } => mle_grid(counts, xt, grid)?.value,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloStats {
    pub stats: ErrorStats,
    pub bias_se: f64,
    pub mse_se: f64,
    pub valid_trials: usize,
    pub invalid_trials: usize,
    pub clamped_trials: usize,
    /// More than [`INVALID_WARNING_FRACTION`] of the trials had no defined estimate.
    pub invalid_warning: bool,
}

/// Ensemble statistics of a sequence of estimates. Population moments, so that
/// `mse = variance + bias^2` holds for the sample itself.
fn ensemble(epsilon: f64, n_photons: u64, estimates: &[f64]) -> (ErrorStats, f64, f64) {
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let variance = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    let sq: Vec<f64> = estimates.iter().map(|e| (e - epsilon).powi(2)).collect();
    let mse = sq.iter().sum::<f64>() / n;
    let (bias_se, mse_se) = if estimates.len() < 2 {
        (f64::NAN, f64::NAN)
    } else {
        let sq_var = sq.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / (n - 1.0);
        ((variance * n / (n - 1.0) / n).sqrt(), (sq_var / n).sqrt())
    };
    (ErrorStats::from_moments(epsilon, n_photons, mean, variance, mse), bias_se, mse_se)
}

/// Monte Carlo error statistics of `estimator` over `cfg.trials` independent draws.
pub fn mc_error_stats(
    epsilon: f64,
    xt: &CrosstalkMatrix,
    cfg: &SamplingConfig,
    estimator: &EstimatorKind,
) -> Result<MonteCarloStats> {
    cfg.validate()?;
    let draws: Vec<(Option<f64>, bool)> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let s = sample_counts(epsilon, xt, cfg, trial);
            (estimator.estimate(&s.counts, xt).ok(), s.clamped)
        })
        .collect();
    let estimates: Vec<f64> = draws.iter().filter_map(|(e, _)| *e).collect();
    let invalid = draws.len() - estimates.len();
    let clamped_trials = draws.iter().filter(|(_, c)| *c).count();
    if estimates.is_empty() {
        return Err(Error::UndefinedEstimate("no trial produced a defined estimate"));
    }
    let (stats, bias_se, mse_se) = ensemble(epsilon, cfg.n_photons, &estimates);
    Ok(MonteCarloStats {
        stats,
        bias_se,
        mse_se,
        valid_trials: estimates.len(),
        invalid_trials: invalid,
        clamped_trials,
        invalid_warning: invalid as f64 > INVALID_WARNING_FRACTION * cfg.trials as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapConfig {
    /// Resamples per bootstrap run.
    pub reps: usize,
    /// Independent bootstrap runs used for the MSE uncertainty.
    pub outer: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { reps: 50, outer: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Error statistics of each outer run.
    pub runs: Vec<ErrorStats>,
    pub mse_mean: f64,
    /// Spread of the MSE across outer runs.
    pub mse_sd: f64,
    pub estimate_mean: f64,
    pub estimate_sd: f64,
    pub invalid_resamples: usize,
}

/// Bootstrap MSE of `estimator` at `n_photons` detections drawn with replacement from a
/// pool of recorded detection events.
///
/// The pool is held as per-channel totals: drawing `n_photons` labelled events with
/// replacement is a `Binomial(n_photons, n1 / total)` draw of the HG1 count.
pub fn bootstrap_mse(
    pool: &CountRecord,
    n_photons: u64,
    epsilon_true: f64,
    xt: &CrosstalkMatrix,
    estimator: &EstimatorKind,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult> {
    if pool.total() < n_photons {
        return Err(Error::InsufficientData { needed: n_photons, available: pool.total() });
    }
    if n_photons == 0 || cfg.reps == 0 || cfg.outer == 0 {
        return Err(domain("bootstrap needs n_photons, reps and outer > 0"));
    }
    let share = pool.n1 as f64 / pool.total() as f64;
    let resample = |outer: usize, rep: usize| -> Option<f64> {
        let stream = ((outer as u64) << 32) | rep as u64;
        let mut rng = trial_rng(cfg.seed, stream);
        let n1 = draw_binomial(n_photons, share, &mut rng);
        estimator.estimate(&CountRecord::new(n_photons - n1, n1), xt).ok()
    };
    let runs: Vec<(Vec<f64>, usize)> = (0..cfg.outer)
        .into_par_iter()
        .map(|o| {
            let all: Vec<Option<f64>> = (0..cfg.reps).map(|r| resample(o, r)).collect();
            let valid: Vec<f64> = all.iter().flatten().copied().collect();
            let invalid = all.len() - valid.len();
            (valid, invalid)
        })
        .collect();
    let invalid_resamples = runs.iter().map(|(_, i)| i).sum();
    let mut stats = Vec::with_capacity(runs.len());
    for (valid, _) in &runs {
        if valid.is_empty() {
            return Err(Error::UndefinedEstimate("a bootstrap run produced no defined estimate"));
        }
        stats.push(ensemble(epsilon_true, n_photons, valid).0);
    }
    let pooled: Vec<f64> = runs.iter().flat_map(|(v, _)| v.iter().copied()).collect();
    let (mse_mean, mse_sd) = mean_sd(stats.iter().map(|s| s.mse));
    let (estimate_mean, estimate_sd) = mean_sd(pooled.iter().copied());
    Ok(BootstrapResult { runs: stats, mse_mean, mse_sd, estimate_mean, estimate_sd, invalid_resamples })
}

/// Mean and sample standard deviation (zero for a single value).
fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Resolution {
    Resolved { epsilon: f64, per_db: f64 },
    NotResolvable,
}

impl Resolution {
    pub fn epsilon(&self) -> Option<f64> {
        match self {
            Resolution::Resolved { epsilon, .. } => Some(*epsilon),
            Resolution::NotResolvable => None,
        }
    }
}

/// Smallest grid separation whose exact PER exceeds one.
pub fn min_resolvable(n_photons: u64, xt: &CrosstalkMatrix, eps_grid: &[f64]) -> Result<Resolution> {
    if eps_grid.first().is_some_and(|&e| !(e > 0.0)) || eps_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("grid must be ascending and start above zero"));
    }
    for &eps in eps_grid {
        let stats = exact_mse(eps, n_photons, xt)?;
        let p = per(&stats);
        if p.resolves() {
            return Ok(Resolution::Resolved { epsilon: eps, per_db: p.db });
        }
    }
    Ok(Resolution::NotResolvable)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseCorrected {
    pub counts: CountRecord,
    pub clamped: bool,
}

/// Per-channel background subtraction, clamped at zero.
pub fn subtract_noise(signal: &CountRecord, noise: &CountRecord) -> NoiseCorrected {
    let clamped = noise.n0 > signal.n0 || noise.n1 > signal.n1;
    NoiseCorrected {
        counts: CountRecord::new(signal.n0.saturating_sub(noise.n0), signal.n1.saturating_sub(noise.n1)),
        clamped,
    }
}

/// Input, transmitted and retrieved counts of one memory run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRecord {
    pub n_in: f64,
    pub n_tran: f64,
    pub n_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryEfficiencies {
    pub storage: f64,
    pub retrieval: f64,
    pub total: f64,
}

pub fn memory_efficiencies(rec: &EfficiencyRecord) -> Result<MemoryEfficiencies> {
    let EfficiencyRecord { n_in, n_tran, n_out } = *rec;
    if !(n_in > 0.0) {
        return Err(domain("input counts must be > 0"));
    }
    if !(0.0..=n_in).contains(&n_tran) || !(0.0..=n_in - n_tran).contains(&n_out) {
        return Err(domain(format!(
            "inconsistent counts: n_in {n_in}, n_tran {n_tran}, n_out {n_out}"
        )));
    }
    let stored = n_in - n_tran;
    if stored == 0.0 {
        return Err(domain("nothing stored: retrieval efficiency undefined"));
    }
    Ok(MemoryEfficiencies { storage: stored / n_in, retrieval: n_out / stored, total: n_out / n_in })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::information::fi_two_mode_exact;

    fn calibrated() -> CrosstalkMatrix {
        CrosstalkMatrix::calibrated()
    }

    #[test]
    fn sampling_examples() {
        let cfg = SamplingConfig::new(10_000, 7, 1);
        for t in 0..50 {
            assert_eq!(sample_counts(0.0, &CrosstalkMatrix::ideal(), &cfg, t).counts.n1, 0);
        }
        let a = sample_counts(0.3, &calibrated(), &cfg, 11);
        let b = sample_counts(0.3, &calibrated(), &cfg, 11);
        assert_eq!(a, b);
        let binom = SamplingConfig { mode: SamplingMode::FixedTotalBinomial, ..cfg };
        let s = sample_counts(0.3, &calibrated(), &binom, 3);
        assert_eq!(s.counts.total(), 10_000);
    }

    #[test]
    fn poisson_sampling_mean() {
        let cfg = SamplingConfig::new(100_000, 2024, 100_000);
        let trials = 100_000u64;
        let draws: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| sample_counts(0.05, &calibrated(), &cfg, t).counts.n1 as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / trials as f64;
        let mu = perturbed_probs(0.05, &calibrated()).p1 * 1e5;
        assert!((mu - 355.6).abs() < 0.05);
        assert!((mean - mu).abs() < 3.0 * mu.sqrt() / (trials as f64).sqrt(), "{mean} vs {mu}");
    }

    #[test]
    fn exact_mse_examples() {
        for n in [10u64, 2_000, 100_000] {
            let s = exact_mse(0.0, n, &CrosstalkMatrix::ideal()).unwrap();
            assert_eq!(s.mse, 0.0);
            assert!(per(&s).infinite);
        }
        for eps in [0.0, 0.05, 0.3, 1.0] {
            for n in [2_000u64, 100_000] {
                let s = exact_mse(eps, n, &calibrated()).unwrap();
                assert!((s.mse - s.variance - s.bias * s.bias).abs() < 1e-10);
            }
        }
        assert!(exact_mse(0.1, 100, &CrosstalkMatrix::new(0.5, 0.5).unwrap()).is_err());
    }

    #[test]
    fn exact_mse_drops_below_crlb_at_small_separation() {
        let n = 2_000u64;
        let below = (1..=15).map(|i| i as f64 * 0.01).any(|eps| {
            let mse = exact_mse(eps, n, &calibrated()).unwrap().mse;
            let fi = fi_two_mode_exact(eps, &calibrated()).unwrap().value;
            mse < 1.0 / (n as f64 * fi)
        });
        assert!(below);
    }

    #[test]
    fn exact_mse_brute_force_small_n() {
        // direct pmf evaluation over all k for a small total
        let xt = CrosstalkMatrix::new(0.95, 0.97).unwrap();
        let (eps, n) = (0.6, 40u64);
        let mu = perturbed_probs(eps, &xt).p1 * n as f64;
        let mut mse = 0.0;
        let mut pmf = (-mu).exp();
        for k in 0..400u64 {
            if k > 0 {
                pmf *= mu / k as f64;
            }
            let floor = (1.0 - xt.alpha()) * n as f64;
            let top = xt.beta() * n as f64;
            let kf = k as f64;
            let est = if kf < floor {
                0.0
            } else if kf >= top {
                DEFAULT_CEILING
            } else {
                4.0 * ((kf - floor) / (top - kf)).sqrt()
            };
            mse += (est - eps).powi(2) * pmf;
        }
        let got = exact_mse(eps, n, &xt).unwrap().mse;
        assert!((got - mse).abs() < 1e-11, "{got} vs {mse}");
    }

    #[test]
    fn exact_matches_monte_carlo() {
        let cfg = SamplingConfig::new(10_000, 99, 100_000);
        let mc = mc_error_stats(0.2, &calibrated(), &cfg, &EstimatorKind::mle_closed()).unwrap();
        let exact = exact_mse(0.2, 10_000, &calibrated()).unwrap();
        assert!((mc.stats.mse - exact.mse).abs() < 3.0 * mc.mse_se);
        assert!((mc.stats.mse - mc.stats.variance - mc.stats.bias.powi(2)).abs() < 1e-10);
    }

    #[test]
    fn bias_profile() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let ideal = exact_bias_profile(&grid, 100_000, &CrosstalkMatrix::ideal()).unwrap();
        assert!(ideal.last().unwrap().bias.abs() < 1e-3);
        let mut origin = Vec::new();
        for n in [2_000u64, 10_000, 100_000] {
            let b = exact_bias_profile(&grid[..3], n, &calibrated()).unwrap();
            assert!(b[0].bias > 0.0);
            origin.push(b[0].bias);
        }
        assert!(origin[2] < origin[0]);
        assert!(exact_bias_profile(&[0.1], 1000, &calibrated()).is_err());
        assert!(exact_bias_profile(&[0.2, 0.1], 1000, &calibrated()).is_err());
    }

    #[test]
    fn monte_carlo_contract() {
        let one = SamplingConfig::new(5_000, 3, 1);
        let s = mc_error_stats(0.4, &calibrated(), &one, &EstimatorKind::mle_closed()).unwrap();
        assert_eq!(s.stats.variance, 0.0);

        let cfg = SamplingConfig::new(5_000, 3, 2_000);
        let raw = mc_error_stats(0.4, &CrosstalkMatrix::ideal(), &cfg, &EstimatorKind::Raw).unwrap();
        let mle = mc_error_stats(0.4, &CrosstalkMatrix::ideal(), &cfg, &EstimatorKind::mle_closed()).unwrap();
        assert_eq!(raw.stats, mle.stats);

        let again = mc_error_stats(0.4, &CrosstalkMatrix::ideal(), &cfg, &EstimatorKind::Raw).unwrap();
        assert_eq!(raw, again);

        // p1 = 1 with a fixed total leaves n0 = 0 in every trial
        let tiny = SamplingConfig { mode: SamplingMode::FixedTotalBinomial, ..SamplingConfig::new(5, 3, 100) };
        let r = mc_error_stats(4.0, &CrosstalkMatrix::new(0.0, 1.0).unwrap(), &tiny, &EstimatorKind::Raw);
        assert!(r.is_err());

        let mixed = SamplingConfig::new(2, 5, 1000);
        let r = mc_error_stats(3.0, &calibrated(), &mixed, &EstimatorKind::Raw).unwrap();
        assert!(r.invalid_trials > 0 && r.invalid_warning);
        assert_eq!(r.valid_trials + r.invalid_trials, 1000);

        assert!(mc_error_stats(0.1, &calibrated(), &SamplingConfig::new(10, 1, 0), &EstimatorKind::Raw).is_err());
    }

    #[test]
    fn bootstrap_contract() {
        let pool = CountRecord::new(99_000, 1_000);
        let cfg = BootstrapConfig { reps: 40, outer: 5, seed: 17 };
        let a = bootstrap_mse(&pool, 10_000, 0.3, &calibrated(), &EstimatorKind::mle_closed(), &cfg).unwrap();
        let b = bootstrap_mse(&pool, 10_000, 0.3, &calibrated(), &EstimatorKind::mle_closed(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs.len(), 5);

        let single = BootstrapConfig { reps: 1, outer: 3, seed: 1 };
        let s = bootstrap_mse(&pool, 10_000, 0.3, &calibrated(), &EstimatorKind::mle_closed(), &single).unwrap();
        assert!(s.runs.iter().all(|r| r.variance == 0.0));

        let err = bootstrap_mse(&pool, 200_000, 0.3, &calibrated(), &EstimatorKind::Raw, &cfg);
        assert!(matches!(err, Err(Error::InsufficientData { needed: 200_000, available: 100_000 })));
    }

    #[test]
    fn bootstrap_agrees_with_exact_mse() {
        let xt = calibrated();
        let eps = 0.3;
        let p1 = perturbed_probs(eps, &xt).p1;
        let total = 50_000_000u64;
        let n1 = (p1 * total as f64).round() as u64;
        let pool = CountRecord::new(total - n1, n1);
        let cfg = BootstrapConfig { reps: 4_000, outer: 5, seed: 5 };
        let n = 10_000u64;
        let b = bootstrap_mse(&pool, n, eps, &xt, &EstimatorKind::mle_closed(), &cfg).unwrap();
        let exact = exact_mse(eps, n, &xt).unwrap();
        // binomial resampling has variance N p1 (1 - p1), the Poisson model N p1
        let se = b.mse_sd / (cfg.outer as f64).sqrt();
        let rel = (b.mse_mean - exact.mse).abs() / exact.mse;
        assert!((b.mse_mean - exact.mse).abs() < 3.0 * se + p1 * exact.mse, "rel {rel}");
    }

    #[test]
    fn per_examples() {
        let s = ErrorStats::from_moments(0.1, 100, 0.1, 0.01, 0.01);
        let p = per(&s);
        assert!((p.linear - 1.0).abs() < 1e-15 && p.db.abs() < 1e-12);
        let good = per(&exact_mse(0.05, 100_000, &calibrated()).unwrap());
        assert!(good.db > 0.0, "{}", good.db);
        for n in [2_000u64, 10_000] {
            assert!(per(&exact_mse(0.05, n, &calibrated()).unwrap()).db < 0.0);
        }
    }

    #[test]
    fn resolvability() {
        let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
        assert_eq!(min_resolvable(100_000, &calibrated(), &grid).unwrap().epsilon(), Some(0.05));
        assert_eq!(min_resolvable(1_000_000_000, &CrosstalkMatrix::ideal(), &grid).unwrap().epsilon(), Some(0.05));
        let low = min_resolvable(2_000, &calibrated(), &grid).unwrap().epsilon().unwrap();
        assert!(low > 0.05);
        assert_eq!(min_resolvable(1, &calibrated(), &[0.01]).unwrap(), Resolution::NotResolvable);
        assert!(min_resolvable(100, &calibrated(), &[0.0, 0.1]).is_err());
    }

    #[test]
    fn noise_subtraction() {
        let s = CountRecord::new(10, 5);
        assert_eq!(subtract_noise(&s, &CountRecord::default()).counts, s);
        let r = subtract_noise(&s, &CountRecord::new(3, 2));
        assert_eq!(r.counts, CountRecord::new(7, 3));
        assert!(!r.clamped);
        let r = subtract_noise(&CountRecord::new(2, 1), &CountRecord::new(5, 0));
        assert_eq!(r.counts, CountRecord::new(0, 1));
        assert!(r.clamped);
    }

    #[test]
    fn efficiencies() {
        let e = memory_efficiencies(&EfficiencyRecord { n_in: 100.0, n_tran: 60.0, n_out: 15.0 }).unwrap();
        assert!((e.storage - 0.40).abs() < 1e-15);
        assert!((e.retrieval - 0.375).abs() < 1e-15);
        assert!((e.total - 0.15).abs() < 1e-15);
        assert!((e.total - e.storage * e.retrieval).abs() < 1e-12);
        let e = memory_efficiencies(&EfficiencyRecord { n_in: 100.0, n_tran: 30.0, n_out: 0.0 }).unwrap();
        assert_eq!((e.retrieval, e.total), (0.0, 0.0));
        let e = memory_efficiencies(&EfficiencyRecord { n_in: 100.0, n_tran: 0.0, n_out: 5.0 }).unwrap();
        assert_eq!(e.storage, 1.0);
        assert!(memory_efficiencies(&EfficiencyRecord { n_in: 0.0, n_tran: 0.0, n_out: 0.0 }).is_err());
        assert!(memory_efficiencies(&EfficiencyRecord { n_in: 10.0, n_tran: 10.0, n_out: 0.0 }).is_err());
        assert!(memory_efficiencies(&EfficiencyRecord { n_in: 10.0, n_tran: 5.0, n_out: 6.0 }).is_err());
    }
}
