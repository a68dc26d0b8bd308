//! Run configuration: one TOML file plus `key.path=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunError;
use crate::model::{CrosstalkMatrix, INCOHERENT_PHASES};
use crate::statistics::{BootstrapConfig, EstimatorKind, SamplingMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub crosstalk: CrosstalkConfig,
    pub epsilon: EpsilonGrid,
    pub photons: Vec<u64>,
    pub monte_carlo: MonteCarloConfig,
    pub estimator: EstimatorKind,
    pub bootstrap: BootstrapSection,
    pub bias_map: BiasMapConfig,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            crosstalk: CrosstalkConfig::default(),
            epsilon: EpsilonGrid::default(),
            photons: vec![2_000, 10_000, 100_000],
            monte_carlo: MonteCarloConfig::default(),
            estimator: EstimatorKind::mle_closed(),
            bootstrap: BootstrapSection::default(),
            bias_map: BiasMapConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrosstalkConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for CrosstalkConfig {
    fn default() -> Self {
        let xt = CrosstalkMatrix::calibrated();
        Self { alpha: xt.alpha(), beta: xt.beta() }
    }
}

/// Either an explicit list or `start..=stop` in steps of `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsilonGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub values: Option<Vec<f64>>,
}

impl Default for EpsilonGrid {
    fn default() -> Self {
        Self { start: 0.0, stop: 1.0, step: 0.05, values: None }
    }
}

impl EpsilonGrid {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step, values: None }
    }

    /// Grid points, rounded to 12 decimals so that `k * step` lands on the decimal value.
    pub fn points(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12).collect()
    }

    fn validate(&self, name: &str) -> Result<(), RunError> {
        let bad = |msg: String| Err(RunError::Config(format!("{name}: {msg}")));
        match &self.values {
            Some(v) => {
                if v.is_empty() {
                    return bad("values must not be empty".into());
                }
                if v.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
                    return bad("values must be finite and >= 0".into());
                }
                if v.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("values must be strictly ascending".into());
                }
            }
            None => {
                if !(self.start >= 0.0) || !self.start.is_finite() {
                    return bad(format!("start must be >= 0, got {}", self.start));
                }
                if !(self.step > 0.0) || !self.step.is_finite() {
                    return bad(format!("step must be > 0, got {}", self.step));
                }
                if !(self.stop >= self.start) || !self.stop.is_finite() {
                    return bad(format!("stop must be >= start, got {}", self.stop));
                }
                if (self.stop - self.start) / self.step > 1e6 {
                    return bad("grid has more than 1e6 points".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub mode: SamplingMode,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { trials: 2_000, mode: SamplingMode::PoissonCounts }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapSection {
    pub reps: usize,
    pub outer: usize,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        let b = BootstrapConfig::default();
        Self { reps: b.reps, outer: b.outer }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiasMapConfig {
    pub epsilon: EpsilonGrid,
    pub photons: Vec<u64>,
}

impl Default for BiasMapConfig {
    fn default() -> Self {
        Self { epsilon: EpsilonGrid::range(0.0, 0.3, 0.01), photons: vec![2_000, 10_000, 100_000] }
    }
}

/// Synthetic counts datasets in the `estimate`/`calibrate` input schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub epsilon: Vec<f64>,
    /// Detected signal photons per separation, split evenly over the phases.
    pub photons_per_point: u64,
    /// Mean background counts per configuration.
    pub noise_mean: f64,
    pub phases: Vec<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            epsilon: vec![0.1, 0.3, 0.5],
            photons_per_point: 100_000,
            noise_mean: 20.0,
            phases: INCOHERENT_PHASES.to_vec(),
        }
    }
}

impl RunConfig {
    /// Loads `path` (or the defaults), applies `overrides` in order, then validates.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, RunError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| RunError::Io(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for (key, value) in overrides {
            apply_override(&mut table, key, value)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| RunError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RunError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), RunError> {
        self.crosstalk_matrix()?;
        self.epsilon.validate("epsilon")?;
        self.bias_map.epsilon.validate("bias_map.epsilon")?;
        for (name, list) in [("photons", &self.photons), ("bias_map.photons", &self.bias_map.photons)] {
            if list.is_empty() || list.contains(&0) {
                return Err(RunError::Config(format!("{name} must be a non-empty list of positive counts")));
            }
        }
        if self.monte_carlo.trials == 0 {
            return Err(RunError::Config("monte_carlo.trials must be > 0".into()));
        }
        if self.bootstrap.reps == 0 || self.bootstrap.outer == 0 {
            return Err(RunError::Config("bootstrap.reps and bootstrap.outer must be > 0".into()));
        }
        match self.estimator {
            EstimatorKind::MleClosed { ceiling } if !(ceiling > 0.0) => {
                return Err(RunError::Config("estimator.ceiling must be > 0".into()));
            }
            EstimatorKind::MleGrid { grid } if !(grid.eps_max > 0.0 && grid.step > 0.0 && grid.resolution > 0.0) => {
                return Err(RunError::Config("estimator grid parameters must be > 0".into()));
            }
            _ => {}
        }
        let sim = &self.simulate;
        if sim.epsilon.is_empty() || sim.epsilon.iter().any(|e| !(*e >= 0.0)) {
            return Err(RunError::Config("simulate.epsilon must list separations >= 0".into()));
        }
        if sim.phases.is_empty() || sim.phases.iter().any(|p| !(*p > -std::f64::consts::PI && *p <= std::f64::consts::PI)) {
            return Err(RunError::Config("simulate.phases must lie in (-pi, pi]".into()));
        }
        if sim.photons_per_point == 0 || !(sim.noise_mean >= 0.0) {
            return Err(RunError::Config("simulate needs photons_per_point > 0 and noise_mean >= 0".into()));
        }
        Ok(())
    }

    pub fn crosstalk_matrix(&self) -> Result<CrosstalkMatrix, RunError> {
        let xt = CrosstalkMatrix::new(self.crosstalk.alpha, self.crosstalk.beta)
            .map_err(|e| RunError::Config(format!("crosstalk: {e}")))?;
        if !xt.is_informative() {
            return Err(RunError::Config(format!(
                "crosstalk: alpha + beta = {} must exceed 1",
                xt.alpha() + xt.beta()
            )));
        }
        Ok(xt)
    }

    pub fn bootstrap_config(&self, seed: u64) -> BootstrapConfig {
        BootstrapConfig { reps: self.bootstrap.reps, outer: self.bootstrap.outer, seed }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes to JSON");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Splits `a.b=v` into its key path and value.
pub fn parse_assignment(s: &str) -> Result<(String, String), RunError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| RunError::Config(format!("override `{s}` is not of the form key=value")))?;
    let k = k.trim();
    if k.is_empty() || k.split('.').any(str::is_empty) {
        return Err(RunError::Config(format!("override `{s}` has an empty key segment")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

/// The value is read as a TOML literal when it parses as one, otherwise as a string.
fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<(), RunError> {
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("non-empty key");
    let mut cursor = table;
    for p in parents {
        let entry = cursor
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| RunError::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String, RunError> {
    let bytes = std::fs::read(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
