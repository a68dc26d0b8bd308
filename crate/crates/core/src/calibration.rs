//! Least-squares fit of the crosstalk parameters from projection frequencies measured
//! across a grid of known separations.
//!
//! The cost is `C = sum_eps [(f0 - p0)^2 + (f1 - p1)^2]` with `p` from
//! [`perturbed_probs`], unweighted. It is minimized by an exhaustive grid over the unit
//! square followed by box-constrained Nelder–Mead from several starts.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::information::{fi_two_mode_exact, superres_param, SuperresolutionParameter};
use crate::model::{perturbed_probs, CrosstalkMatrix};
use crate::statistics::{sample_counts, SamplingConfig};

/// Photon count per separation in the reference calibration run.
pub const REFERENCE_PHOTONS_PER_ROW: f64 = 1.6e5;

const GRID_STEP: f64 = 1e-3;
const PARAM_TOL: f64 = 1e-7;
const MAX_ITERATIONS: usize = 20_000;

/// Counts at one known separation. Counts are real-valued so that exact probabilities
/// can stand in for an infinite-count measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub epsilon: f64,
    pub n0: f64,
    pub n1: f64,
}

impl CalibrationRow {
    pub fn frequencies(&self) -> (f64, f64) {
        let n = self.n0 + self.n1;
        (self.n0 / n, self.n1 / n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDataset {
    rows: Vec<CalibrationRow>,
    photons_per_row: f64,
}

impl CalibrationDataset {
    pub fn new(rows: Vec<CalibrationRow>, photons_per_row: f64) -> Result<Self> {
        if !(photons_per_row > 0.0) {
            return Err(domain(format!("photons per row must be > 0, got {photons_per_row}")));
        }
        for (i, r) in rows.iter().enumerate() {
            if !(r.epsilon >= 0.0) || !r.epsilon.is_finite() {
                return Err(domain(format!("row {i}: separation must be >= 0, got {}", r.epsilon)));
            }
            if !(r.n0 >= 0.0 && r.n1 >= 0.0) || !(r.n0 + r.n1 > 0.0) {
                return Err(domain(format!("row {i}: counts must be >= 0 with a positive total")));
            }
        }
        let mut eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
        eps.sort_by(f64::total_cmp);
        if eps.windows(2).any(|w| w[0] == w[1]) {
            return Err(domain("separations must be distinct"));
        }
        Ok(Self { rows, photons_per_row })
    }

    /// Rows whose frequencies equal the model probabilities exactly.
    pub fn noiseless(xt: &CrosstalkMatrix, eps_grid: &[f64], photons_per_row: f64) -> Result<Self> {
        let rows = eps_grid
            .iter()
            .map(|&epsilon| {
                let p = perturbed_probs(epsilon, xt);
                CalibrationRow { epsilon, n0: p.p0 * photons_per_row, n1: p.p1 * photons_per_row }
            })
            .collect();
        Self::new(rows, photons_per_row)
    }

    /// Poisson-sampled rows; row `i` draws from stream `i` of `seed`.
    pub fn sampled(
        xt: &CrosstalkMatrix,
        eps_grid: &[f64],
        photons_per_row: u64,
        seed: u64,
    ) -> Result<Self> {
        let cfg = SamplingConfig::new(photons_per_row, seed, 1);
        let rows = eps_grid
            .iter()
            .enumerate()
            .map(|(i, &epsilon)| {
                let c = sample_counts(epsilon, xt, &cfg, i as u64).counts;
                CalibrationRow { epsilon, n0: c.n0 as f64, n1: c.n1 as f64 }
            })
            .collect();
        Self::new(rows, photons_per_row as f64)
    }

    pub fn rows(&self) -> &[CalibrationRow] {
        &self.rows
    }

    pub fn photons_per_row(&self) -> f64 {
        self.photons_per_row
    }
}

/// The reference separation grid, 0 to 1 in steps of 0.05.
pub fn reference_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.05).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub crosstalk: CrosstalkMatrix,
    pub residual: f64,
    pub per_row_residuals: Vec<f64>,
    /// The data do not pin down an informative device; `crosstalk` is the best
    /// boundary point found.
    pub flat_cost_warning: bool,
}

fn row_cost(row: &CalibrationRow, alpha: f64, beta: f64) -> f64 {
    let xt = CrosstalkMatrix::new(alpha, beta).expect("parameters clamped to the unit box");
    let p = perturbed_probs(row.epsilon, &xt);
    let (f0, f1) = row.frequencies();
    (f0 - p.p0).powi(2) + (f1 - p.p1).powi(2)
}

/// The calibration cost at `(alpha, beta)`.
pub fn calibration_cost(data: &CalibrationDataset, alpha: f64, beta: f64) -> f64 {
    data.rows.iter().map(|r| row_cost(r, alpha, beta)).sum()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    alpha: f64,
    beta: f64,
}

impl Candidate {
    fn order(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.alpha.total_cmp(&other.alpha))
            .then(self.beta.total_cmp(&other.beta))
    }

    fn informative(&self) -> bool {
        self.alpha + self.beta > 1.0
    }
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    if b.order(&a) == Ordering::Less {
        b
    } else {
        a
    }
}

fn coarse_grid(data: &CalibrationDataset) -> Candidate {
    let steps = (1.0 / GRID_STEP).round() as usize;
    (0..=steps)
        .into_par_iter()
        .map(|i| {
            let alpha = i as f64 * GRID_STEP;
            // only the informative half of the square, alpha + beta > 1
            (steps - i + 1..=steps)
                .map(|j| {
                    let beta = j as f64 * GRID_STEP;
                    Candidate { cost: calibration_cost(data, alpha, beta), alpha, beta }
                })
                .reduce(better)
        })
        .flatten()
        .reduce(|| Candidate { cost: f64::INFINITY, alpha: 1.0, beta: 1.0 }, better)
}

fn clamp_unit(p: [f64; 2]) -> [f64; 2] {
    [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)]
}

/// Nelder–Mead with vertices projected onto the unit square, restarted from the best
/// vertex until a restart no longer moves it.
fn nelder_mead(data: &CalibrationDataset, start: [f64; 2], scale: f64) -> Candidate {
    let f = |p: [f64; 2]| calibration_cost(data, p[0], p[1]);
    let mut best = clamp_unit(start);
    let mut best_cost = f(best);
    let mut step = scale;
    let mut iterations = 0;
    loop {
        let mut simplex: Vec<([f64; 2], f64)> = [
            best,
            [best[0] + if best[0] + step <= 1.0 { step } else { -step }, best[1]],
            [best[0], best[1] + if best[1] + step <= 1.0 { step } else { -step }],
        ]
        .into_iter()
        .map(clamp_unit)
        .map(|p| (p, f(p)))
        .collect();
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diameter = simplex[1..]
                .iter()
                .map(|(p, _)| (p[0] - simplex[0].0[0]).abs().max((p[1] - simplex[0].0[1]).abs()))
                .fold(0.0, f64::max);
            if diameter < PARAM_TOL || iterations >= MAX_ITERATIONS {
                break;
            }
            iterations += 1;
            let centroid = [
                0.5 * (simplex[0].0[0] + simplex[1].0[0]),
                0.5 * (simplex[0].0[1] + simplex[1].0[1]),
            ];
            let worst = simplex[2];
            let along = |t: f64| {
                clamp_unit([
                    centroid[0] + t * (worst.0[0] - centroid[0]),
                    centroid[1] + t * (worst.0[1] - centroid[1]),
                ])
            };
            let reflected = along(-1.0);
            let fr = f(reflected);
            if fr < simplex[0].1 {
                let expanded = along(-2.0);
                let fe = f(expanded);
                simplex[2] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[1].1 {
                simplex[2] = (reflected, fr);
            } else {
                let contracted = if fr < worst.1 { along(-0.5) } else { along(0.5) };
                let fc = f(contracted);
                if fc < worst.1.min(fr) {
                    simplex[2] = (contracted, fc);
                } else {
                    let b = simplex[0].0;
                    for v in simplex.iter_mut().skip(1) {
                        let p = [0.5 * (b[0] + v.0[0]), 0.5 * (b[1] + v.0[1])];
                        *v = (p, f(p));
                    }
                }
            }
        }
        let (p, c) = simplex[0];
        let moved = (p[0] - best[0]).abs().max((p[1] - best[1]).abs());
        let improved = c < best_cost;
        if improved {
            best = p;
            best_cost = c;
        }
        if !improved || moved < PARAM_TOL || iterations >= MAX_ITERATIONS {
            break;
        }
        step = (10.0 * moved).max(10.0 * PARAM_TOL);
    }
    Candidate { cost: best_cost, alpha: best[0], beta: best[1] }
}

fn frequencies_flat(data: &CalibrationDataset) -> bool {
    let f1: Vec<f64> = data.rows.iter().map(|r| r.frequencies().1).collect();
    let (lo, hi) = f1.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    hi - lo <= 1e-12
}

/// Fits `(alpha, beta)` to the dataset.
///
/// Starts are the coarse-grid minimizer, the four corners of the unit square and its
/// center. Minimizers with `alpha + beta <= 1` are rejected; ties go to the lower cost,
/// then the lexicographically smaller `(alpha, beta)`.
pub fn fit_crosstalk(data: &CalibrationDataset) -> Result<CalibrationResult> {
    if data.rows.len() < 2 {
        return Err(domain(format!("calibration needs at least 2 rows, got {}", data.rows.len())));
    }
    let grid = coarse_grid(data);
    let mut starts = vec![([grid.alpha, grid.beta], 2.0 * GRID_STEP)];
    starts.extend(
        [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]].map(|s| (s, 0.1)),
    );
    let candidates: Vec<Candidate> =
        starts.par_iter().map(|&(s, scale)| nelder_mead(data, s, scale)).collect();
    let overall = candidates.iter().copied().reduce(better).expect("non-empty starts");
    let informative = candidates.iter().copied().filter(Candidate::informative).reduce(better);
    let mut flat = frequencies_flat(data);
    let chosen = match informative {
        Some(c) if c.cost <= overall.cost + 1e-15 => c,
        Some(c) => {
            // the unconstrained optimum is on the degenerate side; keep the informative
            // candidate closest to it in cost
            flat = true;
            c
        }
        None => {
            flat = true;
            overall
        }
    };
    let crosstalk = CrosstalkMatrix::new(chosen.alpha, chosen.beta)?;
    let per_row_residuals: Vec<f64> =
        data.rows.iter().map(|r| row_cost(r, chosen.alpha, chosen.beta)).collect();
    Ok(CalibrationResult {
        crosstalk,
        residual: per_row_residuals.iter().sum(),
        per_row_residuals,
        flat_cost_warning: flat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReport {
    pub epsilon: f64,
    pub f1: f64,
    pub p1: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherPoint {
    pub epsilon: f64,
    pub fisher: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub alpha: f64,
    pub beta: f64,
    pub leakage: f64,
    pub residual: f64,
    pub flat_cost_warning: bool,
    pub rows: Vec<RowReport>,
    /// Absent for a non-informative fit.
    pub superresolution: Option<SuperresolutionParameter>,
    pub fisher_curve: Vec<FisherPoint>,
}

pub fn calibration_report(result: &CalibrationResult, data: &CalibrationDataset) -> Result<CalibrationReport> {
    let xt = result.crosstalk;
    let rows = data
        .rows
        .iter()
        .zip(&result.per_row_residuals)
        .map(|(r, &residual)| RowReport {
            epsilon: r.epsilon,
            f1: r.frequencies().1,
            p1: perturbed_probs(r.epsilon, &xt).p1,
            residual,
        })
        .collect();
    let superresolution = if xt.is_informative() { Some(superres_param(&xt)?) } else { None };
    let mut eps: Vec<f64> = data.rows.iter().map(|r| r.epsilon).collect();
    eps.sort_by(f64::total_cmp);
    let fisher_curve = if xt.is_informative() {
        eps.iter()
            .map(|&e| Ok(FisherPoint { epsilon: e, fisher: fi_two_mode_exact(e, &xt)?.value }))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(CalibrationReport {
        alpha: xt.alpha(),
        beta: xt.beta(),
        leakage: 1.0 - xt.alpha(),
        residual: result.residual,
        flat_cost_warning: result.flat_cost_warning,
        rows,
        superresolution,
        fisher_curve,
    })
}
