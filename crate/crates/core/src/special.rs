//! Log-space helpers for Poisson and factorial terms.

use std::f64::consts::PI;

/// `ln(k!) - (k ln k - k)`, i.e. the Stirling remainder. Exact summation below 20.
fn stirling_remainder(k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k < 20 {
        let kf = k as f64;
        return ln_factorial_small(k) - (kf * kf.ln() - kf);
    }
    let x = k as f64;
    let x2 = x * x;
    0.5 * (2.0 * PI * x).ln()
        + (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2) / x
}

fn ln_factorial_small(k: u64) -> f64 {
    // k! is exactly representable for k <= 22
    (1..=k).map(|i| i as f64).product::<f64>().ln()
}

/// `ln(k!)`.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 20 {
        return ln_factorial_small(k);
    }
    let x = k as f64;
    x * x.ln() - x + stirling_remainder(k)
}

/// Natural log of the Poisson pmf `mu^k e^{-mu} / k!`.
///
/// Written as `k ln(mu/k) + (k - mu) - remainder(k)` so that terms near the mode do not
/// cancel at the `k ln mu` scale.
pub fn ln_poisson_pmf(k: u64, mu: f64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return -mu;
    }
    let kf = k as f64;
    kf * ((mu - kf) / kf).ln_1p() + (kf - mu) - stirling_remainder(k)
}

/// Poisson weights `(k, pmf(k))` covering cumulative mass at least `1 - tail`.
///
/// Walks outward from the mode with the multiplicative recurrence, so no factorial is
/// ever formed explicitly.
pub fn poisson_support(mu: f64, tail: f64) -> Vec<(u64, f64)> {
    if mu == 0.0 {
        return vec![(0, 1.0)];
    }
    let mode = mu.floor() as u64;
    let p_mode = ln_poisson_pmf(mode, mu).exp();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    let mut mass = p_mode;

    let mut p = p_mode;
    let mut k = mode;
    while k > 0 {
        p *= k as f64 / mu;
        k -= 1;
        lower.push((k, p));
        mass += p;
        if p < tail * 1e-3 && k as f64 <= mu - mu.sqrt() {
            break;
        }
    }
    let mut p = p_mode;
    let mut k = mode;
    loop {
        k += 1;
        p *= mu / k as f64;
        upper.push((k, p));
        mass += p;
        if (mass > 1.0 - tail && p < tail * 1e-3) || p == 0.0 {
            break;
        }
    }
    lower.reverse();
    let mut out = lower;
    out.push((mode, p_mode));
    out.extend(upper);
    out
}
