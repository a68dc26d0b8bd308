//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

struct State<'a, F> {
    f: &'a F,
    evaluations: usize,
    error: f64,
    unconverged: usize,
}

/// Integrates `f` over `[lower, upper]` to absolute tolerance `abs_tol`.
///
/// The interval is first cut into fixed panels so narrow features away from the
/// midpoint are not missed by the initial five-point estimate.
pub fn adaptive_simpson<F>(f: F, lower: f64, upper: f64, abs_tol: f64) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    if !(lower.is_finite() && upper.is_finite()) || upper < lower || !(abs_tol > 0.0) {
        return Err(crate::error::domain(format!(
            "bad quadrature request [{lower}, {upper}] tol {abs_tol}"
        )));
    }
    if upper == lower {
        return Ok(Quadrature { value: 0.0, error_estimate: 0.0, evaluations: 0 });
    }
    let mut st = State { f: &f, evaluations: 0, error: 0.0, unconverged: 0 };
    let width = (upper - lower) / INITIAL_PANELS as f64;
    let panel_tol = abs_tol / INITIAL_PANELS as f64;
    let mut total = 0.0;
    for i in 0..INITIAL_PANELS {
        let a = lower + width * i as f64;
        let b = if i + 1 == INITIAL_PANELS { upper } else { a + width };
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        st.evaluations += 3;
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += recurse(&mut st, a, b, fa, fm, fb, whole, panel_tol, 0);
    }
    if !total.is_finite() {
        return Err(Error::QuadratureNotConverged {
            lower,
            upper,
            estimate: total,
            error_estimate: f64::INFINITY,
            unconverged: st.unconverged,
        });
    }
    if st.unconverged > 0 {
        return Err(Error::QuadratureNotConverged {
            lower,
            upper,
            estimate: total,
            error_estimate: st.error,
            unconverged: st.unconverged,
        });
    }
    Ok(Quadrature { value: total, error_estimate: st.error, evaluations: st.evaluations })
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    st: &mut State<'_, F>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = (st.f)(lm);
    let frm = (st.f)(rm);
    st.evaluations += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        st.error += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    if depth >= MAX_DEPTH {
        st.unconverged += 1;
        st.error += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    recurse(st, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
        + recurse(st, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
}
