//! Aggregated counts datasets.
//!
//! One row per measurement configuration:
//!
//! ```text
//! epsilon_true,phase,control_mode,retrieved_counts,noise_counts
//! 0.3,-1.5707963267948966,hg0,24811,19
//! 0.3,-1.5707963267948966,hg1,174,23
//! ```
//!
//! `control_mode` names the read-in mode (`hg0` or `hg1`); `noise_counts` is the
//! background registered with the signal blocked.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::SimulateConfig;
use super::RunError;
use crate::estimators::CountRecord;
use crate::model::{perturbed_probs, CrosstalkMatrix};
use crate::statistics::subtract_noise;

pub const COUNTS_HEADER: [&str; 5] =
    ["epsilon_true", "phase", "control_mode", "retrieved_counts", "noise_counts"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    Hg0,
    Hg1,
}

impl ControlMode {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hg0" => Some(ControlMode::Hg0),
            "hg1" => Some(ControlMode::Hg1),
            _ => None,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            ControlMode::Hg0 => "hg0",
            ControlMode::Hg1 => "hg1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountsRow {
    pub epsilon_true: f64,
    pub phase: f64,
    pub control_mode: ControlMode,
    pub retrieved_counts: u64,
    pub noise_counts: u64,
}

/// Parses a counts dataset; the first schema violation aborts with its line number.
pub fn read_counts<R: Read>(reader: R, source: &str) -> Result<Vec<CountsRow>, RunError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = r.headers().map_err(|e| RunError::Data(format!("{source}:1: {e}")))?;
    if headers.iter().collect::<Vec<_>>() != COUNTS_HEADER {
        return Err(RunError::Data(format!(
            "{source}:1: header must be `{}`",
            COUNTS_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let bad = |msg: String| RunError::Data(format!("{source}:{line}: {msg}"));
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != COUNTS_HEADER.len() {
            return Err(bad(format!("expected 5 fields, found {}", rec.len())));
        }
        let float = |k: usize| rec[k].parse::<f64>().map_err(|e| bad(format!("{}: {e}", COUNTS_HEADER[k])));
        let count = |k: usize| rec[k].parse::<u64>().map_err(|e| bad(format!("{}: {e}", COUNTS_HEADER[k])));
        let epsilon_true = float(0)?;
        if !(epsilon_true >= 0.0) || !epsilon_true.is_finite() {
            return Err(bad(format!("epsilon_true must be >= 0, got {epsilon_true}")));
        }
        let phase = float(1)?;
        if !(phase > -std::f64::consts::PI && phase <= std::f64::consts::PI) {
            return Err(bad(format!("phase must lie in (-pi, pi], got {phase}")));
        }
        let control_mode = ControlMode::parse(&rec[2])
            .ok_or_else(|| bad(format!("control_mode must be hg0 or hg1, got `{}`", &rec[2])))?;
        rows.push(CountsRow {
            epsilon_true,
            phase,
            control_mode,
            retrieved_counts: count(3)?,
            noise_counts: count(4)?,
        });
    }
    if rows.is_empty() {
        return Err(RunError::Data(format!("{source}: no data rows")));
    }
    Ok(rows)
}

pub fn read_counts_path(path: &Path) -> Result<Vec<CountsRow>, RunError> {
    let f = std::fs::File::open(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    read_counts(f, &path.display().to_string())
}

pub fn write_counts<W: Write>(rows: &[CountsRow], writer: W) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| RunError::Io(e.to_string());
    w.write_record(COUNTS_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.epsilon_true.to_string(),
            r.phase.to_string(),
            r.control_mode.as_str().to_string(),
            r.retrieved_counts.to_string(),
            r.noise_counts.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| RunError::Io(e.to_string()))
}

/// Noise-subtracted counts at one separation, summed over phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatedPoint {
    pub epsilon: f64,
    pub counts: CountRecord,
    pub phases: usize,
    /// Some phase had more background than signal in a channel.
    pub clamped: bool,
}

/// Subtracts background per phase, then sums the phases of each separation.
pub fn aggregate(rows: &[CountsRow]) -> Result<Vec<AggregatedPoint>, RunError> {
    type Key = (u64, u64);
    let mut cells: BTreeMap<Key, [Option<&CountsRow>; 2]> = BTreeMap::new();
    for r in rows {
        let key = (r.epsilon_true.to_bits(), r.phase.to_bits());
        let slot = &mut cells.entry(key).or_default()[r.control_mode as usize];
        if slot.is_some() {
            return Err(RunError::Data(format!(
                "duplicate row for epsilon_true {}, phase {}, {}",
                r.epsilon_true,
                r.phase,
                r.control_mode.as_str()
            )));
        }
        *slot = Some(r);
    }
    let mut by_eps: BTreeMap<u64, AggregatedPoint> = BTreeMap::new();
    for ((eps_bits, _), pair) in &cells {
        let (Some(h0), Some(h1)) = (pair[0], pair[1]) else {
            let r = pair[0].or(pair[1]).expect("at least one mode present");
            return Err(RunError::Data(format!(
                "epsilon_true {}, phase {} lacks one of the hg0/hg1 rows",
                r.epsilon_true, r.phase
            )));
        };
        let corrected = subtract_noise(
            &CountRecord::new(h0.retrieved_counts, h1.retrieved_counts),
            &CountRecord::new(h0.noise_counts, h1.noise_counts),
        );
        let point = by_eps.entry(*eps_bits).or_insert(AggregatedPoint {
            epsilon: h0.epsilon_true,
            counts: CountRecord::default(),
            phases: 0,
            clamped: false,
        });
        point.counts = point.counts + corrected.counts;
        point.phases += 1;
        point.clamped |= corrected.clamped;
    }
    // f64 bit order equals numeric order for non-negative values
    Ok(by_eps.into_values().collect())
}

/// Synthetic dataset: per phase, `Poisson(p_mode N / phases + noise)` retrieved counts and
/// `Poisson(noise)` background, drawn from stream `row index` of `seed`.
pub fn simulate_counts(sim: &SimulateConfig, xt: &CrosstalkMatrix, seed: u64) -> Vec<CountsRow> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    let draw = |mean: f64, rng: &mut ChaCha8Rng| -> u64 {
        if mean <= 0.0 {
            0
        } else {
            Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
        }
    };
    let per_phase = sim.photons_per_point as f64 / sim.phases.len() as f64;
    let mut rows = Vec::new();
    for &eps in &sim.epsilon {
        let p = perturbed_probs(eps, xt);
        for &phase in &sim.phases {
            for (mode, prob) in [(ControlMode::Hg0, p.p0), (ControlMode::Hg1, p.p1)] {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(rows.len() as u64);
                let retrieved_counts = draw(prob * per_phase + sim.noise_mean, &mut rng);
                let noise_counts = draw(sim.noise_mean, &mut rng);
                rows.push(CountsRow { epsilon_true: eps, phase, control_mode: mode, retrieved_counts, noise_counts });
            }
        }
    }
    rows
}
