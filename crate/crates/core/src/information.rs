//! Fisher information of direct-intensity and mode-filtering measurements, Cramér–Rao
//! bounds and the superresolution parameter.
//!
//! All values are per detected photon and expressed for the dimensionless separation.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{perturbed_p1_slope, perturbed_probs, CrosstalkMatrix};
use crate::quadrature::adaptive_simpson;

/// Quantum Fisher information per photon for the separation; the HG basis attains it.
pub const QUANTUM_FISHER: f64 = 0.25;

/// Small-separation coefficient of the direct-intensity information:
/// `F_DI(epsilon) ~ DI_SMALL_SEPARATION_COEFFICIENT * epsilon^2`.
///
/// Derived from `E[(x^2 - 1)^2] = 2` for a unit normal; regenerated by quadrature in tests.
pub const DI_SMALL_SEPARATION_COEFFICIENT: f64 = 0.125;

const DI_WINDOW_MARGIN: f64 = 12.0;
const DI_ABS_TOL: f64 = 1e-10;
const HG_SUM_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMethod {
    DirectIntensity,
    HgFull,
    TwoModeExact,
    TwoModeApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherValue {
    pub value: f64,
    pub method: FisherMethod,
}

impl FisherValue {
    fn new(value: f64, method: FisherMethod) -> Self {
        Self { value, method }
    }
}

/// `F_DI(epsilon) / epsilon^2`, finite down to `epsilon = 0`.
///
/// With `x = (omega - omega0)/sigma` and `a = epsilon/2` the integrand
/// `(dS/d eps)^2 / S` reduces to `S(x) (x tanh(a x) - a)^2 / 4`, which never divides
/// by the density. Dividing out `epsilon^2` leaves `S(x) (x tanh(a x)/a - 1)^2 / 16`.
pub fn fi_direct_coefficient(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let a = 0.5 * epsilon;
    let integrand = |x: f64| {
        let density = 0.5 * (std_normal(x - a) + std_normal(x + a));
        let slope = if a == 0.0 { x } else { (a * x).tanh() / a };
        density * (x * slope - 1.0).powi(2) / 16.0
    };
    let half = DI_WINDOW_MARGIN + epsilon;
    Ok(adaptive_simpson(integrand, -half, half, DI_ABS_TOL)?.value)
}

/// Direct-intensity Fisher information, `∫ (dS/d eps)^2 / S d omega`.
pub fn fi_direct(epsilon: f64) -> Result<FisherValue> {
    let c = fi_direct_coefficient(epsilon)?;
    Ok(FisherValue::new(c * epsilon * epsilon, FisherMethod::DirectIntensity))
}

/// Information of the full HG basis, summed until the terms and mass tail are negligible.
///
/// Each term is `P(n) (2n/eps - eps/8)^2`; at `epsilon = 0` the sum is taken at its
/// limit, where only the `n = 1` term survives and equals 1/4.
pub fn fi_hg_full(epsilon: f64, tolerance: Option<f64>) -> Result<FisherValue> {
    check_epsilon(epsilon)?;
    let tol = tolerance.unwrap_or(HG_SUM_TOL);
    if epsilon < 1e-150 {
        return Ok(FisherValue::new(QUANTUM_FISHER, FisherMethod::HgFull));
    }
    let lambda = epsilon * epsilon / 16.0;
    let mut p = (-lambda).exp();
    let mut mass = 0.0;
    let mut sum = 0.0;
    let mut n = 0u32;
    loop {
        let score = 2.0 * n as f64 / epsilon - epsilon / 8.0;
        let term = p * score * score;
        sum += term;
        mass += p;
        if n as f64 > lambda && term < tol && mass > 1.0 - 1e-12 {
            break;
        }
        n += 1;
        p *= lambda / n as f64;
    }
    Ok(FisherValue::new(sum, FisherMethod::HgFull))
}

/// Closed-form two-mode information with crosstalk.
pub fn fi_two_mode_exact(epsilon: f64, xt: &CrosstalkMatrix) -> Result<FisherValue> {
    check_epsilon(epsilon)?;
    xt.require_informative()?;
    let (alpha, beta) = (xt.alpha(), xt.beta());
    let q = (epsilon / 4.0).powi(2);
    let c = xt.contrast();
    let value = if epsilon == 0.0 {
        if alpha < 1.0 {
            0.0
        } else {
            // alpha = 1: q / (1 - alpha + beta q) = 1 / beta cancels the vanishing numerator
            beta / 4.0
        }
    } else {
        c * c * q / (4.0 * (1.0 + q).powi(2) * (alpha + (1.0 - beta) * q) * (1.0 - alpha + beta * q))
    };
    Ok(FisherValue::new(value, FisherMethod::TwoModeExact))
}

/// Two-outcome information computed from the perturbed probabilities and their slope,
/// `(dp1/d eps)^2 (1/p0 + 1/p1)`.
pub fn fi_two_outcome(epsilon: f64, xt: &CrosstalkMatrix) -> Result<f64> {
    check_epsilon(epsilon)?;
    xt.require_informative()?;
    let p = perturbed_probs(epsilon, xt);
    let d = perturbed_p1_slope(epsilon, xt);
    Ok(d * d * (1.0 / p.p0 + 1.0 / p.p1))
}

/// Low-crosstalk approximation `1 / (4 [(1 - alpha)/(eps/4)^2 + 1])`.
pub fn fi_two_mode_approx(epsilon: f64, alpha: f64) -> Result<FisherValue> {
    check_epsilon(epsilon)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let q = (epsilon / 4.0).powi(2);
    let leak = 1.0 - alpha;
    let value = if leak == 0.0 { QUANTUM_FISHER } else { q / (4.0 * (leak + q)) };
    Ok(FisherValue::new(value, FisherMethod::TwoModeApprox))
}

/// Limiting ratio of mode-filtering to direct-intensity information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperresolutionParameter {
    /// Numerical ratio at the evaluation separation; infinite when divergent.
    pub value: f64,
    /// `(alpha + beta - 1)^2 / (8 alpha (1 - alpha))`.
    pub analytic: f64,
    /// Relative change between the evaluation and check separations.
    pub relative_change: f64,
    pub converged: bool,
    pub divergent: bool,
}

pub const SUPERRES_EVAL_EPSILON: f64 = 1e-3;
pub const SUPERRES_CHECK_EPSILON: f64 = 1e-4;
const SUPERRES_CONVERGENCE: f64 = 1e-3;

pub fn superres_param(xt: &CrosstalkMatrix) -> Result<SuperresolutionParameter> {
    xt.require_informative()?;
    let (alpha, c) = (xt.alpha(), xt.contrast());
    if alpha == 1.0 {
        return Ok(SuperresolutionParameter {
            value: f64::INFINITY,
            analytic: f64::INFINITY,
            relative_change: 0.0,
            converged: false,
            divergent: true,
        });
    }
    let ratio = |eps: f64| -> Result<f64> {
        Ok(fi_two_mode_exact(eps, xt)?.value / fi_direct(eps)?.value)
    };
    let value = ratio(SUPERRES_EVAL_EPSILON)?;
    let check = ratio(SUPERRES_CHECK_EPSILON)?;
    let relative_change = ((value - check) / check).abs();
    Ok(SuperresolutionParameter {
        value,
        analytic: c * c / (8.0 * alpha * (1.0 - alpha)),
        relative_change,
        converged: relative_change < SUPERRES_CONVERGENCE,
        divergent: false,
    })
}

/// Unbiased and bias-corrected Cramér–Rao bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub crlb_unbiased: f64,
    pub crlb_biased: f64,
    pub bias: f64,
    pub bias_slope: f64,
    /// Set when the information is zero and both bounds are infinite.
    pub infinite: bool,
}

/// `1/(N F)` and `(1 + b')^2/(N F) + b^2`. Without a bias profile both fields hold the
/// unbiased bound.
pub fn crlb(
    epsilon: f64,
    n_photons: f64,
    fi: FisherValue,
    bias_profile: Option<(f64, f64)>,
) -> Result<BoundResult> {
    check_epsilon(epsilon)?;
    if !(n_photons > 0.0) {
        return Err(domain(format!("photon number must be > 0, got {n_photons}")));
    }
    if !(fi.value >= 0.0) || !fi.value.is_finite() {
        return Err(domain(format!("Fisher information must be finite and >= 0, got {}", fi.value)));
    }
    let info = n_photons * fi.value;
    let unbiased = 1.0 / info;
    let (bias, slope) = bias_profile.unwrap_or((0.0, 0.0));
    let biased = match bias_profile {
        None => unbiased,
        Some(_) if info == 0.0 => f64::INFINITY,
        Some(_) => (1.0 + slope).powi(2) / info + bias * bias,
    };
    Ok(BoundResult {
        crlb_unbiased: unbiased,
        crlb_biased: biased,
        bias,
        bias_slope: slope,
        infinite: info == 0.0,
    })
}

fn std_normal(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(domain(format!("separation must be finite and >= 0, got {epsilon}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{intensity_spectrum, LinePair};

    fn calibrated() -> CrosstalkMatrix {
        CrosstalkMatrix::calibrated()
    }

    /// Plain-form DI integrand with finite-difference dS/d eps, as an independent route.
    fn fi_direct_by_differences(eps: f64) -> f64 {
        let h = 1e-5;
        let s = |w: f64, e: f64| intensity_spectrum(w, &LinePair::dimensionless(e).unwrap());
        let integrand = |w: f64| {
            let d = (s(w, eps + h) - s(w, eps - h)) / (2.0 * h);
            let v = s(w, eps);
            if v > 1e-300 {
                d * d / v
            } else {
                0.0
            }
        };
        let lim = 12.0 + eps;
        adaptive_simpson(integrand, -lim, lim, 1e-11).unwrap().value
    }

    #[test]
    fn direct_information_matches_finite_differences() {
        for eps in [0.3, 1.0, 2.0] {
            let a = fi_direct(eps).unwrap().value;
            let b = fi_direct_by_differences(eps);
            assert!(((a - b) / b).abs() < 1e-6, "eps={eps}: {a} vs {b}");
        }
    }

    #[test]
    fn direct_information_limits() {
        assert_eq!(fi_direct(0.0).unwrap().value, 0.0);
        let c = fi_direct(1e-2).unwrap().value / 1e-4;
        assert!((c - 0.125).abs() < 1e-3);
        for eps in [0.1, 0.5, 1.0, 2.0, 4.0] {
            assert!(fi_direct(eps).unwrap().value < 0.25);
        }
        assert!(fi_direct(-1.0).is_err());
    }

    #[test]
    fn small_separation_coefficient_regenerates() {
        let c = fi_direct_coefficient(0.0).unwrap();
        assert!((c - DI_SMALL_SEPARATION_COEFFICIENT).abs() < 1e-10, "{c}");
    }

    #[test]
    fn hg_basis_saturates_quantum_limit() {
        for eps in [0.0, 1e-8, 0.1, 1.0, 3.0, 4.0, 10.0] {
            let v = fi_hg_full(eps, None).unwrap().value;
            assert!((v - 0.25).abs() < 1e-9, "eps={eps}: {v}");
        }
    }

    #[test]
    fn two_mode_exact_examples() {
        let ideal = CrosstalkMatrix::ideal();
        for eps in [0.0, 0.2, 1.0, 3.0] {
            let q: f64 = (eps / 4.0f64).powi(2);
            let want = 1.0 / (4.0 * (1.0 + q).powi(2));
            assert!((fi_two_mode_exact(eps, &ideal).unwrap().value - want).abs() < 1e-15);
        }
        assert_eq!(fi_two_mode_exact(0.0, &calibrated()).unwrap().value, 0.0);
        let v = fi_two_mode_exact(0.05, &calibrated()).unwrap().value;
        assert!((v - 0.0109).abs() < 1e-4, "{v}");
        assert!(fi_two_mode_exact(0.1, &CrosstalkMatrix::new(0.5, 0.5).unwrap()).is_err());
    }

    #[test]
    fn two_mode_exact_matches_outcome_information() {
        for xt in [calibrated(), CrosstalkMatrix::new(0.97, 0.95).unwrap(), CrosstalkMatrix::ideal()] {
            for eps in [0.05, 0.2, 1.0] {
                let exact = fi_two_mode_exact(eps, &xt).unwrap().value;
                // finite differences of the probabilities, independent of the closed slope
                let h = 1e-5;
                let p1 = |e: f64| perturbed_probs(e, &xt).p1;
                let dp = (8.0 * (p1(eps + h) - p1(eps - h)) - (p1(eps + 2.0 * h) - p1(eps - 2.0 * h)))
                    / (12.0 * h);
                let p = perturbed_probs(eps, &xt);
                let fd = dp * dp * (1.0 / p.p0 + 1.0 / p.p1);
                assert!(((exact - fd) / exact).abs() < 1e-8, "eps={eps}");
                let analytic = fi_two_outcome(eps, &xt).unwrap();
                assert!(((exact - analytic) / exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_mode_bounded_by_quantum() {
        for (a, b) in [(1.0, 1.0), (0.9966, 1.0), (0.9, 0.8), (0.7, 0.99), (1.0, 0.5)] {
            let xt = CrosstalkMatrix::new(a, b).unwrap();
            for i in 0..=80 {
                let eps = i as f64 * 0.05;
                let v = fi_two_mode_exact(eps, &xt).unwrap().value;
                assert!(v <= fi_hg_full(eps, None).unwrap().value + 1e-15);
            }
        }
    }

    #[test]
    fn approximation_examples() {
        for eps in [0.01, 0.5, 2.0] {
            assert_eq!(fi_two_mode_approx(eps, 1.0).unwrap().value, 0.25);
        }
        assert_eq!(fi_two_mode_approx(0.0, 0.99).unwrap().value, 0.0);
        let approx = fi_two_mode_approx(0.1, 0.9966).unwrap().value;
        let exact = fi_two_mode_exact(0.1, &calibrated()).unwrap().value;
        assert!(((approx - exact) / exact).abs() < 0.05);
        for (alpha, tol) in [(0.999, 1e-2), (0.9999, 2e-3)] {
            let r = fi_two_mode_approx(0.1, alpha).unwrap().value
                / fi_two_mode_exact(0.1, &CrosstalkMatrix::new(alpha, 1.0).unwrap()).unwrap().value;
            assert!((r - 1.0).abs() < tol, "alpha={alpha}: {r}");
        }
        assert!(fi_two_mode_approx(0.1, 0.0).is_err());
    }

    #[test]
    fn superresolution_parameter() {
        let s = superres_param(&calibrated()).unwrap();
        assert!(s.converged);
        assert!((s.value - 37.0).abs() < 1.0, "{}", s.value);
        assert!(((s.value - s.analytic) / s.analytic).abs() < 1e-3);

        let s = superres_param(&CrosstalkMatrix::new(0.99, 1.0).unwrap()).unwrap();
        let want = 0.99f64.powi(2) / (8.0 * 0.99 * 0.01);
        assert!((s.analytic - want).abs() < 1e-12);
        assert!(((s.value - want) / want).abs() < 1e-3);
        assert!((want - 12.375).abs() < 1e-9);

        assert!(superres_param(&CrosstalkMatrix::new(0.5, 0.5).unwrap()).is_err());
        let s = superres_param(&CrosstalkMatrix::ideal()).unwrap();
        assert!(s.divergent && s.value.is_infinite());

        let mut last = 0.0;
        for alpha in [0.9, 0.95, 0.99, 0.995, 0.999] {
            let s = superres_param(&CrosstalkMatrix::new(alpha, 1.0).unwrap()).unwrap().value;
            assert!(s > last);
            last = s;
        }
    }

    #[test]
    fn bounds() {
        let quantum = FisherValue::new(0.25, FisherMethod::HgFull);
        let b = crlb(0.3, 1e4, quantum, None).unwrap();
        assert!((b.crlb_unbiased - 4e-4).abs() < 1e-18);
        assert_eq!(b.crlb_biased, b.crlb_unbiased);
        let b = crlb(0.3, 1e4, quantum, Some((0.0, 0.0))).unwrap();
        assert_eq!(b.crlb_biased, b.crlb_unbiased);
        let b = crlb(0.3, 1e4, quantum, Some((0.01, -0.5))).unwrap();
        assert!(b.crlb_biased >= 0.01 * 0.01);
        assert!((b.crlb_biased - (0.25 * 4e-4 + 1e-4)).abs() < 1e-15);

        let fi = fi_two_mode_exact(0.05, &calibrated()).unwrap();
        let b = crlb(0.05, 1e5, fi, None).unwrap();
        assert!((b.crlb_unbiased - 9.2e-4).abs() < 1e-5, "{}", b.crlb_unbiased);

        let zero = FisherValue::new(0.0, FisherMethod::DirectIntensity);
        let b = crlb(0.0, 1e4, zero, None).unwrap();
        assert!(b.infinite && b.crlb_unbiased.is_infinite());
        assert!(crlb(0.1, 0.0, quantum, None).is_err());
    }
}
