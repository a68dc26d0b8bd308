//! Two-line scene, its spectral and temporal field, and the Hermite-Gauss projection
//! probabilities with and without channel crosstalk.
//!
//! Frequencies are in rad/s and times in seconds. All estimation quantities depend on the
//! scene only through the dimensionless separation `epsilon = delta_omega / sigma`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::ln_factorial;

/// Linewidth used in the reference experiment, rad/s.
pub const REFERENCE_SIGMA: f64 = 33.3e6;

/// Relative phases mixed to make the two lines mutually incoherent.
pub const INCOHERENT_PHASES: [f64; 4] = [-PI / 2.0, 0.0, PI / 2.0, PI];

/// Two equal-intensity Gaussian lines centered at `omega0 ± epsilon * sigma / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinePair {
    epsilon: f64,
    sigma: f64,
    omega0: f64,
}

impl LinePair {
    pub fn new(epsilon: f64, sigma: f64, omega0: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(domain(format!("separation must be finite and >= 0, got {epsilon}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(domain(format!("linewidth must be > 0, got {sigma}")));
        }
        if !omega0.is_finite() {
            return Err(domain("center frequency must be finite"));
        }
        Ok(Self { epsilon, sigma, omega0 })
    }

    /// Unit linewidth at zero center frequency.
    pub fn dimensionless(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 1.0, 0.0)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Absolute separation `delta_omega`, rad/s.
    pub fn separation(&self) -> f64 {
        self.epsilon * self.sigma
    }

    fn half_offset(&self) -> f64 {
        0.5 * self.epsilon * self.sigma
    }
}

/// Relative phase between the two lines, in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSetting(f64);

impl PhaseSetting {
    pub fn new(phi: f64) -> Result<Self> {
        if !(phi > -PI && phi <= PI) {
            return Err(domain(format!("phase must lie in (-pi, pi], got {phi}")));
        }
        Ok(Self(phi))
    }

    pub fn zero() -> Self {
        Self(0.0)
    }

    pub fn radians(&self) -> f64 {
        self.0
    }

    pub fn incoherent_set() -> [PhaseSetting; 4] {
        INCOHERENT_PHASES.map(PhaseSetting)
    }
}

/// Column-stochastic leakage between the HG0 and HG1 detection channels.
///
/// ```text
/// M = | alpha    1 - beta |
///     | 1-alpha  beta     |
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkMatrix {
    alpha: f64,
    beta: f64,
}

impl CrosstalkMatrix {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(Self { alpha, beta })
    }

    /// Perfect mode filter.
    pub fn ideal() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }

    /// The calibrated device of the reference experiment: 0.34% HG0 to HG1 leakage.
    pub fn calibrated() -> Self {
        Self { alpha: 0.9966, beta: 1.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `alpha + beta - 1`; positive for a device that carries information.
    pub fn contrast(&self) -> f64 {
        self.alpha + self.beta - 1.0
    }

    pub fn is_informative(&self) -> bool {
        self.contrast() > 0.0
    }

    pub(crate) fn require_informative(&self) -> Result<()> {
        if self.is_informative() {
            Ok(())
        } else {
            Err(Error::DegenerateDevice { sum: self.alpha + self.beta })
        }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.alpha, 1.0 - self.beta], [1.0 - self.alpha, self.beta]]
    }

    /// `M p`.
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let m = self.matrix();
        [m[0][0] * p[0] + m[0][1] * p[1], m[1][0] * p[0] + m[1][1] * p[1]]
    }
}

impl Default for CrosstalkMatrix {
    fn default() -> Self {
        Self::calibrated()
    }
}

/// HG-mode detection probabilities, truncated once the remaining mass is negligible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeDistribution {
    pub probs: Vec<f64>,
    pub truncation_tail: f64,
}

impl ModeDistribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.truncation_tail
    }
}

/// Two-outcome measurement distribution (HG0 channel, HG1 channel).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeProbs {
    pub p0: f64,
    pub p1: f64,
}

impl TwoModeProbs {
    pub fn from_p1(p1: f64) -> Self {
        Self { p0: 1.0 - p1, p1 }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.p0, self.p1]
    }
}

/// Complex field on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl SampledField {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |j| self.t0 + j as f64 * self.dt)
    }
}

/// Temporal form of the two-line signal, optionally materialized on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSignal {
    pub amplitude: f64,
    pub line_pair: LinePair,
    pub phase: PhaseSetting,
    pub samples: Option<SampledField>,
}

impl TemporalSignal {
    pub fn new(line_pair: LinePair, phase: PhaseSetting) -> Self {
        Self { amplitude: 1.0, line_pair, phase, samples: None }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn value_at(&self, t: f64) -> f64 {
        signal_temporal(t, &self.line_pair, self.phase, self.amplitude)
    }

    /// Fills `samples` on `len` points starting at `t0` with spacing `dt`.
    pub fn sample(&mut self, t0: f64, dt: f64, len: usize) -> Result<&SampledField> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(domain(format!("grid spacing must be > 0, got {dt}")));
        }
        let values = (0..len)
            .map(|j| Complex64::new(self.value_at(t0 + j as f64 * dt), 0.0))
            .collect();
        Ok(self.samples.insert(SampledField { t0, dt, values }))
    }
}

/// Normalized Gaussian spectral amplitude `(2 pi sigma^2)^(-1/4) exp(-omega^2 / 4 sigma^2)`.
pub fn gaussian_amplitude(omega: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(domain(format!("linewidth must be > 0, got {sigma}")));
    }
    Ok(unit_amplitude(omega, sigma))
}

fn unit_amplitude(omega: f64, sigma: f64) -> f64 {
    (2.0 * PI * sigma * sigma).powf(-0.25) * (-omega * omega / (4.0 * sigma * sigma)).exp()
}

/// Incoherent power spectrum: the average of the two line densities.
pub fn intensity_spectrum(omega: f64, scene: &LinePair) -> f64 {
    let d = omega - scene.omega0;
    let h = scene.half_offset();
    let a = unit_amplitude(d - h, scene.sigma);
    let b = unit_amplitude(d + h, scene.sigma);
    0.5 * (a * a + b * b)
}

/// Coherent two-line spectral amplitude at relative phase `phi`.
pub fn signal_spectrum(omega: f64, scene: &LinePair, phase: PhaseSetting) -> Complex64 {
    let d = omega - scene.omega0;
    let h = scene.half_offset();
    let half_phi = 0.5 * phase.radians();
    let first = Complex64::from_polar(unit_amplitude(d - h, scene.sigma), -half_phi);
    let second = Complex64::from_polar(unit_amplitude(d + h, scene.sigma), half_phi);
    (first + second) * FRAC_1_SQRT_2
}

/// Carved temporal field `A cos((epsilon sigma t - phi)/2) exp(-t^2 sigma^2)`.
pub fn signal_temporal(t: f64, scene: &LinePair, phase: PhaseSetting, amplitude: f64) -> f64 {
    let s = scene.sigma;
    amplitude * (0.5 * (scene.epsilon * s * t - phase.radians())).cos() * (-t * t * s * s).exp()
}

/// Factor `c` such that the Fourier transform (kernel `e^{-i omega t}`) of the unit-amplitude
/// temporal signal equals `c * signal_spectrum` at `omega0 = 0`.
pub fn temporal_to_spectral_scale(sigma: f64) -> f64 {
    (PI / 2.0).sqrt() / sigma * (2.0 * PI * sigma * sigma).powf(0.25)
}

/// Ideal probability of detection in HG mode `n`: a Poisson law with mean `epsilon^2 / 16`.
pub fn hg_projection_prob(n: u32, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if epsilon == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let nf = n as f64;
    let ln_p = 2.0 * nf * epsilon.ln() - nf * 16f64.ln() - ln_factorial(n as u64) - epsilon * epsilon / 16.0;
    Ok(ln_p.exp())
}

/// Full HG distribution, truncated once a term drops below `1e-15` with more than
/// `1 - 1e-12` of the mass accumulated. The remainder is stored as the tail.
pub fn hg_mode_distribution(epsilon: f64) -> Result<ModeDistribution> {
    check_epsilon(epsilon)?;
    let lambda = epsilon * epsilon / 16.0;
    let mut probs = Vec::new();
    let mut term = (-lambda).exp();
    let mut mass = 0.0;
    let mut n = 0u32;
    loop {
        probs.push(term);
        mass += term;
        let past_mode = n as f64 >= lambda;
        if past_mode && term < 1e-15 && mass > 1.0 - 1e-12 {
            break;
        }
        n += 1;
        term *= lambda / n as f64;
    }
    let truncation_tail = (1.0 - mass).max(0.0);
    Ok(ModeDistribution { probs, truncation_tail })
}

/// Crosstalk-perturbed two-mode probabilities,
/// `p1 = beta - 16 (alpha + beta - 1) / (16 + epsilon^2)`.
pub fn perturbed_probs(epsilon: f64, xt: &CrosstalkMatrix) -> TwoModeProbs {
    let p1 = xt.beta - 16.0 * xt.contrast() / (16.0 + epsilon * epsilon);
    TwoModeProbs::from_p1(p1.clamp(0.0, 1.0))
}

/// Matrix route: restrict the ideal distribution to HG0/HG1, renormalize, apply `M`.
pub fn perturbed_probs_via_matrix(epsilon: f64, xt: &CrosstalkMatrix) -> Result<TwoModeProbs> {
    let p0 = hg_projection_prob(0, epsilon)?;
    let p1 = hg_projection_prob(1, epsilon)?;
    let norm = p0 + p1;
    let [q0, q1] = xt.apply([p0 / norm, p1 / norm]);
    let s = q0 + q1;
    Ok(TwoModeProbs { p0: q0 / s, p1: q1 / s })
}

/// `d p1 / d epsilon` of [`perturbed_probs`].
pub fn perturbed_p1_slope(epsilon: f64, xt: &CrosstalkMatrix) -> f64 {
    let d = 16.0 + epsilon * epsilon;
    32.0 * xt.contrast() * epsilon / (d * d)
}

/// Mixes in a background that lands equally in both channels: `p' = (1 - f) p + f / 2`.
pub fn apply_background(probs: TwoModeProbs, leak_fraction: f64) -> Result<TwoModeProbs> {
    if !(0.0..1.0).contains(&leak_fraction) {
        return Err(domain(format!("leak fraction must lie in [0, 1), got {leak_fraction}")));
    }
    let mix = |p: f64| (1.0 - leak_fraction) * p + 0.5 * leak_fraction;
    Ok(TwoModeProbs { p0: mix(probs.p0), p1: mix(probs.p1) })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(domain(format!("separation must be finite and >= 0, got {epsilon}")));
    }
    Ok(())
}
