//! Hermite-Gauss pulse waveforms and linear time-invariant predistortion.
//!
//! A driver chain with response `R` maps an input `x(t)` to `h = R * x`. Measuring one
//! input/output pair gives `R~ = h~ / x~`; a target `h'` is then produced by feeding
//! `x' = F^-1[h'~ / R~]`.
//!
//! All transforms use the forward kernel `e^(-i omega t)` on the discrete grid
//! `omega_k = 2 pi k / (L dt)`, with `k >= L/2` wrapped to negative frequencies.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub const MIN_SAMPLES: usize = 8;
/// Relative spectral floor below which a response bin is not trusted.
pub const DEFAULT_REGULARIZATION_FLOOR: f64 = 1e-6;
/// Share of target spectral energy in flagged bins above which correction is refused.
pub const UNCORRECTABLE_FRACTION: f64 = 0.01;
/// Half-width, in FWHM, a grid must cover around a pulse to avoid a truncation warning.
pub const TRUNCATION_HALF_WIDTHS: f64 = 3.0;

const GRID_RTOL: f64 = 1e-9;

/// Complex samples on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<Complex64>,
    dt: f64,
    t0: f64,
}

impl Waveform {
    pub fn new(samples: Vec<Complex64>, dt: f64, t0: f64) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(domain(format!(
                "waveform needs at least {MIN_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(domain(format!("bad time grid: dt = {dt}, t0 = {t0}")));
        }
        Ok(Self { samples, dt, t0 })
    }

    pub fn from_real(values: &[f64], dt: f64, t0: f64) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect(), dt, t0)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    /// `|x(t)|^2` per sample.
    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }

    /// `sum |x|^2 dt`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.dt
    }

    pub fn is_real(&self) -> bool {
        self.samples.iter().all(|s| s.im == 0.0)
    }

    fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self { samples, dt: self.dt, t0: self.t0 }
    }

    /// Writes `time_s,value`, or `time_s,value,value_im` when any sample is complex.
    /// Floats use the shortest representation that reads back to the same bits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let complex = !self.is_real();
        let header: &[&str] =
            if complex { &["time_s", "value", "value_im"] } else { &["time_s", "value"] };
        w.write_record(header).map_err(io_err)?;
        for (j, s) in self.samples.iter().enumerate() {
            let mut rec = vec![self.time(j).to_string(), s.re.to_string()];
            if complex {
                rec.push(s.im.to_string());
            }
            w.write_record(&rec).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers().map_err(io_err)?.clone();
        let complex = match headers.iter().collect::<Vec<_>>().as_slice() {
            ["time_s", "value"] => false,
            ["time_s", "value", "value_im"] => true,
            other => return Err(Error::Parse(format!("unexpected waveform header {other:?}"))),
        };
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
            let field = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Parse(format!("line {line}: missing column {k}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {line}: {e}")))
            };
            times.push(field(0)?);
            samples.push(Complex64::new(field(1)?, if complex { field(2)? } else { 0.0 }));
        }
        if times.len() < 2 {
            return Err(Error::Parse("waveform file holds fewer than two samples".into()));
        }
        let t0 = times[0];
        let dt = (times[times.len() - 1] - t0) / (times.len() - 1) as f64;
        for (j, &t) in times.iter().enumerate() {
            if (t - (t0 + j as f64 * dt)).abs() > GRID_RTOL * dt * times.len() as f64 {
                return Err(Error::Parse(format!("line {}: time grid is not uniform", j + 2)));
            }
        }
        Self::new(samples, dt, t0)
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        self.write_csv(f)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::read_csv(f)
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Time grid used to synthesize waveforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dt: f64,
    pub len: usize,
    pub t0: f64,
}

impl GridSpec {
    /// `len` samples centered on `t = 0`.
    pub fn centered(dt: f64, len: usize) -> Self {
        Self { dt, len, t0: -0.5 * (len as f64 - 1.0) * dt }
    }

    fn end(&self) -> f64 {
        self.t0 + (self.len as f64 - 1.0) * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HgOrder {
    Hg0,
    Hg1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HgPulse {
    pub waveform: Waveform,
    /// The grid does not reach `TRUNCATION_HALF_WIDTHS` FWHM on both sides of the center.
    pub truncation_warning: bool,
}

/// Field envelope of an HG0 or HG1 pulse.
///
/// HG0 is `A exp(-s^2/2w^2)` with `w = fwhm / sqrt(8 ln 2)` and `s = t - center`; HG1 is
/// `A sqrt(2) (s/w) exp(-s^2/2w^2)`, which carries the same energy.
pub fn hg_waveform(order: HgOrder, center: f64, fwhm: f64, amplitude: f64, grid: GridSpec) -> Result<HgPulse> {
    if !(fwhm > 0.0) || !fwhm.is_finite() {
        return Err(domain(format!("FWHM must be > 0, got {fwhm}")));
    }
    let w = fwhm / (8.0 * 2f64.ln()).sqrt();
    let values: Vec<f64> = (0..grid.len)
        .map(|j| {
            let s = grid.t0 + j as f64 * grid.dt - center;
            let g = (-s * s / (2.0 * w * w)).exp();
            match order {
                HgOrder::Hg0 => amplitude * g,
                HgOrder::Hg1 => amplitude * 2f64.sqrt() * (s / w) * g,
            }
        })
        .collect();
    let waveform = Waveform::from_real(&values, grid.dt, grid.t0)?;
    let reach = TRUNCATION_HALF_WIDTHS * fwhm;
    let truncation_warning = center - reach < grid.t0 || center + reach > grid.end();
    Ok(HgPulse { waveform, truncation_warning })
}

/// Angular frequencies of the DFT bins, with wraparound.
pub fn omega_grid(len: usize, dt: f64) -> Vec<f64> {
    let span = len as f64 * dt;
    (0..len)
        .map(|k| {
            let signed = if k < len.div_ceil(2) { k as f64 } else { k as f64 - len as f64 };
            2.0 * PI * signed / span
        })
        .collect()
}

struct Transforms {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Transforms {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len) }
    }

    fn forward(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut buf = x.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    fn inverse(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut buf = x.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }
}

/// Frequency response on the DFT grid of a waveform length and spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSpectrum {
    values: Vec<Complex64>,
    flagged: Vec<bool>,
    dt: f64,
    regularization_floor: f64,
}

impl ResponseSpectrum {
    pub fn new(values: Vec<Complex64>, flagged: Vec<bool>, dt: f64, regularization_floor: f64) -> Result<Self> {
        if values.len() < MIN_SAMPLES || flagged.len() != values.len() {
            return Err(domain("response needs matching value and flag vectors of length >= 8"));
        }
        if !(dt > 0.0) || !(regularization_floor >= 0.0) {
            return Err(domain(format!("bad response grid: dt = {dt}, floor = {regularization_floor}")));
        }
        Ok(Self { values, flagged, dt, regularization_floor })
    }

    fn from_fn(len: usize, dt: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = omega_grid(len, dt).into_iter().map(f).collect();
        Self::new(values, vec![false; len], dt, DEFAULT_REGULARIZATION_FLOOR)
    }

    pub fn identity(len: usize, dt: f64) -> Result<Self> {
        Self::from_fn(len, dt, |_| Complex64::new(1.0, 0.0))
    }

    /// `exp(-i omega tau)`; an integer number of samples gives an exact circular shift.
    pub fn delay(len: usize, dt: f64, tau: f64) -> Result<Self> {
        Self::from_fn(len, dt, |w| Complex64::from_polar(1.0, -w * tau))
    }

    /// First-order low pass `1 / (1 + i omega / omega_c)`.
    pub fn low_pass(len: usize, dt: f64, omega_c: f64) -> Result<Self> {
        if !(omega_c > 0.0) {
            return Err(domain(format!("cutoff must be > 0, got {omega_c}")));
        }
        Self::from_fn(len, dt, |w| Complex64::new(1.0, 0.0) / Complex64::new(1.0, w / omega_c))
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn flagged(&self) -> &[bool] {
        &self.flagged
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn regularization_floor(&self) -> f64 {
        self.regularization_floor
    }

    pub fn omegas(&self) -> Vec<f64> {
        omega_grid(self.len(), self.dt)
    }

    fn check_grid(&self, w: &Waveform) -> Result<()> {
        check_grids(self.len(), self.dt, w.len(), w.dt)
    }

    /// Writes `index,omega_rad_s,re,im,flagged`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "omega_rad_s", "re", "im", "flagged"]).map_err(io_err)?;
        for (k, ((v, f), om)) in self.values.iter().zip(&self.flagged).zip(self.omegas()).enumerate() {
            w.write_record([
                k.to_string(),
                om.to_string(),
                v.re.to_string(),
                v.im.to_string(),
                u8::from(*f).to_string(),
            ])
            .map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads the format of [`ResponseSpectrum::write_csv`]; the sample spacing is implied
    /// by the first positive frequency bin.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers: Vec<String> = r.headers().map_err(io_err)?.iter().map(str::to_owned).collect();
        if headers != ["index", "omega_rad_s", "re", "im", "flagged"] {
            return Err(Error::Parse(format!("unexpected response header {headers:?}")));
        }
        let mut values = Vec::new();
        let mut flagged = Vec::new();
        let mut omegas = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
            let num = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Parse(format!("line {line}: missing column {k}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {line}: {e}")))
            };
            if num(0)? != i as f64 {
                return Err(Error::Parse(format!("line {line}: expected index {i}")));
            }
            omegas.push(num(1)?);
            values.push(Complex64::new(num(2)?, num(3)?));
            flagged.push(match rec.get(4).map(str::trim) {
                Some("0") | Some("false") => false,
                Some("1") | Some("true") => true,
                other => return Err(Error::Parse(format!("line {line}: bad flag {other:?}"))),
            });
        }
        if omegas.len() < MIN_SAMPLES || !(omegas[1] > 0.0) {
            return Err(Error::Parse("response file needs >= 8 bins with omega_1 > 0".into()));
        }
        let dt = 2.0 * PI / (omegas.len() as f64 * omegas[1]);
        let expected = omega_grid(omegas.len(), dt);
        for (k, (a, b)) in omegas.iter().zip(&expected).enumerate() {
            if (a - b).abs() > GRID_RTOL * omegas[1] * omegas.len() as f64 {
                return Err(Error::Parse(format!("line {}: frequency grid is not the DFT grid", k + 2)));
            }
        }
        Self::new(values, flagged, dt, DEFAULT_REGULARIZATION_FLOOR)
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        self.write_csv(f)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::read_csv(f)
    }
}

fn check_grids(len_a: usize, dt_a: f64, len_b: usize, dt_b: f64) -> Result<()> {
    if len_a != len_b {
        return Err(Error::GridMismatch(format!("lengths {len_a} and {len_b}")));
    }
    if (dt_a - dt_b).abs() > GRID_RTOL * dt_a {
        return Err(Error::GridMismatch(format!("spacings {dt_a} and {dt_b}")));
    }
    Ok(())
}

/// `R~ = h~ / x~` with the default floor.
pub fn estimate_response(input: &Waveform, output: &Waveform) -> Result<ResponseSpectrum> {
    estimate_response_with_floor(input, output, DEFAULT_REGULARIZATION_FLOOR)
}

/// Bins where `|x~| < floor * max |x~|` get `R~ = 0` and are flagged.
pub fn estimate_response_with_floor(input: &Waveform, output: &Waveform, floor: f64) -> Result<ResponseSpectrum> {
    check_grids(input.len(), input.dt, output.len(), output.dt)?;
    if !(floor >= 0.0) {
        return Err(domain(format!("floor must be >= 0, got {floor}")));
    }
    let tf = Transforms::new(input.len());
    let x = tf.forward(&input.samples);
    let h = tf.forward(&output.samples);
    let peak = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::DegenerateInput("input spectrum is identically zero".into()));
    }
    let threshold = floor * peak;
    let (values, flagged): (Vec<_>, Vec<_>) = x
        .iter()
        .zip(&h)
        .map(|(xv, hv)| {
            if xv.norm() < threshold || *xv == Complex64::new(0.0, 0.0) {
                (Complex64::new(0.0, 0.0), true)
            } else {
                (hv / xv, false)
            }
        })
        .unzip();
    ResponseSpectrum::new(values, flagged, input.dt, floor)
}

/// `h = F^-1[R~ x~]`.
pub fn apply_response(input: &Waveform, response: &ResponseSpectrum) -> Result<Waveform> {
    response.check_grid(input)?;
    let tf = Transforms::new(input.len());
    let x = tf.forward(&input.samples);
    let y: Vec<Complex64> = x.iter().zip(&response.values).map(|(a, r)| a * r).collect();
    Ok(input.with_samples(tf.inverse(&y)))
}

/// `x' = F^-1[h'~ / R~]`, zero on flagged or vanishing bins.
pub fn correct_waveform(target: &Waveform, response: &ResponseSpectrum) -> Result<Waveform> {
    response.check_grid(target)?;
    let tf = Transforms::new(target.len());
    let h = tf.forward(&target.samples);
    let total: f64 = h.iter().map(|v| v.norm_sqr()).sum();
    let mut lost = 0.0;
    let corrected: Vec<Complex64> = h
        .iter()
        .zip(response.values.iter().zip(&response.flagged))
        .map(|(hv, (r, &flag))| {
            if flag || r.norm() == 0.0 {
                lost += hv.norm_sqr();
                Complex64::new(0.0, 0.0)
            } else {
                hv / r
            }
        })
        .collect();
    if total > 0.0 && lost / total > UNCORRECTABLE_FRACTION {
        return Err(Error::UncorrectableBand { fraction: lost / total });
    }
    Ok(target.with_samples(tf.inverse(&corrected)))
}

/// Largest gap between two intensity profiles, each normalized to its own peak.
pub fn normalized_intensity_deviation(actual: &Waveform, ideal: &Waveform) -> Result<f64> {
    check_grids(actual.len(), actual.dt, ideal.len(), ideal.dt)?;
    let normalize = |w: &Waveform| -> Result<Vec<f64>> {
        let i = w.intensity();
        let peak = i.iter().copied().fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Err(Error::DegenerateInput("waveform has zero intensity".into()));
        }
        Ok(i.into_iter().map(|v| v / peak).collect())
    };
    let a = normalize(actual)?;
    let b = normalize(ideal)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Relative L2 distance `||a - b|| / ||b||`.
pub fn relative_l2(a: &Waveform, b: &Waveform) -> Result<f64> {
    check_grids(a.len(), a.dt, b.len(), b.dt)?;
    let num: f64 = a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.samples.iter().map(|y| y.norm_sqr()).sum();
    Ok((num / den).sqrt())
}
