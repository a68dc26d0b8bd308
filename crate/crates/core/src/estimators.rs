//! Separation estimators from two-channel photon counts.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{perturbed_probs, CrosstalkMatrix};

/// Returned for counts beyond the model range (`n1 >= beta N`).
pub const DEFAULT_CEILING: f64 = 8.0;

/// Photon counts registered with the HG0 and HG1 read-in configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct CountRecord {
    pub n0: u64,
    pub n1: u64,
}

impl CountRecord {
    pub fn new(n0: u64, n1: u64) -> Self {
        Self { n0, n1 }
    }

    pub fn total(&self) -> u64 {
        self.n0 + self.n1
    }

    pub fn frequencies(&self) -> Option<(f64, f64)> {
        let n = self.total();
        (n > 0).then(|| (self.n0 as f64 / n as f64, self.n1 as f64 / n as f64))
    }
}

impl std::ops::Add for CountRecord {
    type Output = CountRecord;

    fn add(self, rhs: Self) -> Self {
        CountRecord { n0: self.n0 + rhs.n0, n1: self.n1 + rhs.n1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Raw,
    MleClosed,
    MleGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub at_boundary: bool,
    /// `n1 >= beta N`: the counts are outside the model's image and `value` is the ceiling.
    pub out_of_range: bool,
    pub method: EstimateMethod,
}

/// `4 sqrt(n1 / n0)`, from the ideal ratio `P(1)/P(0) = eps^2 / 16`.
pub fn raw_estimator(counts: &CountRecord) -> Result<Estimate> {
    if counts.n0 == 0 {
        return Err(Error::UndefinedEstimate("raw estimator needs n0 > 0"));
    }
    let value = 4.0 * (counts.n1 as f64 / counts.n0 as f64).sqrt();
    Ok(Estimate { value, at_boundary: counts.n1 == 0, out_of_range: false, method: EstimateMethod::Raw })
}

/// Closed-form maximum-likelihood estimate on `epsilon >= 0`.
pub fn mle_closed_form(counts: &CountRecord, xt: &CrosstalkMatrix) -> Result<Estimate> {
    mle_closed_form_with_ceiling(counts, xt, DEFAULT_CEILING)
}

pub fn mle_closed_form_with_ceiling(
    counts: &CountRecord,
    xt: &CrosstalkMatrix,
    ceiling: f64,
) -> Result<Estimate> {
    if counts.total() == 0 {
        return Err(Error::UndefinedEstimate("MLE needs at least one count"));
    }
    xt.require_informative()?;
    Ok(closed_form_value(counts.n1 as f64, counts.total() as f64, xt, ceiling))
}

/// The estimator as a function of real-valued `n1` at total `n`. Shared with the exact
/// Poisson sums so both evaluate the same branch conditions.
pub(crate) fn closed_form_value(n1: f64, n: f64, xt: &CrosstalkMatrix, ceiling: f64) -> Estimate {
    let floor = (1.0 - xt.alpha()) * n;
    let top = xt.beta() * n;
    let est = |value, at_boundary, out_of_range| Estimate {
        value,
        at_boundary,
        out_of_range,
        method: EstimateMethod::MleClosed,
    };
    if n1 < floor {
        est(0.0, true, false)
    } else if n1 >= top {
        est(ceiling, true, true)
    } else {
        est((16.0 * (n1 - floor) / (top - n1)).sqrt(), false, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridOptions {
    pub eps_max: f64,
    pub step: f64,
    /// Final bracket width of the golden-section refinement.
    pub resolution: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { eps_max: 4.0, step: 1e-3, resolution: 1e-6 }
    }
}

/// Log-likelihood relative to the saturated model, `sum n_i ln(p_i / f_i)`.
///
/// Near the optimum its magnitude is small, which keeps the golden-section comparisons
/// resolvable at large counts.
fn relative_log_likelihood(counts: &CountRecord, xt: &CrosstalkMatrix, eps: f64) -> f64 {
    let p = perturbed_probs(eps, xt);
    let n = counts.total() as f64;
    let term = |k: u64, p: f64| {
        if k == 0 {
            0.0
        } else if p <= 0.0 {
            f64::NEG_INFINITY
        } else {
            k as f64 * (p * n / k as f64).ln()
        }
    };
    term(counts.n0, p.p0) + term(counts.n1, p.p1)
}

/// Grid-search MLE over `{0, step, ..., eps_max}` with one golden-section refinement.
pub fn mle_grid(counts: &CountRecord, xt: &CrosstalkMatrix, grid: &GridOptions) -> Result<Estimate> {
    if counts.total() == 0 {
        return Err(Error::UndefinedEstimate("MLE needs at least one count"));
    }
    if !(grid.eps_max > 0.0 && grid.step > 0.0 && grid.resolution > 0.0) {
        return Err(domain("grid needs eps_max, step and resolution > 0"));
    }
    xt.require_informative()?;
    let f = |e: f64| relative_log_likelihood(counts, xt, e);

    let points = (grid.eps_max / grid.step).round() as usize;
    let at = |i: usize| (i as f64 * grid.step).min(grid.eps_max);
    let mut best = 0usize;
    let mut best_val = f(0.0);
    for i in 1..=points {
        let v = f(at(i));
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    let centre = at(best);
    let lo = (centre - grid.step).max(0.0);
    let hi = (centre + grid.step).min(grid.eps_max);
    let refined = golden_section_max(&f, lo, hi, grid.resolution);
    let est = |value, at_boundary| Estimate {
        value,
        at_boundary,
        out_of_range: false,
        method: EstimateMethod::MleGrid,
    };
    if best == 0 && f(0.0) >= f(refined) {
        return Ok(est(0.0, true));
    }
    if best == points && f(grid.eps_max) >= f(refined) {
        return Ok(est(grid.eps_max, true));
    }
    Ok(est(refined, false))
}

fn golden_section_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
