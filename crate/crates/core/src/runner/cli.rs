//! Argument parsing and dispatch for the `superres` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::{parse_assignment, RunConfig};
use super::data::write_counts;
use super::table::{sidecar_path, TableMeta};
use super::{commands as cmd, init_thread_pool, RunError};

#[derive(Debug, Parser)]
#[command(name = "superres", version, about = "Hermite-Gauss frequency superresolution toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set crosstalk.alpha=0.995`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Output file; a `.meta.json` sidecar is written next to it. Defaults to stdout.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fisher information and Cramér–Rao bounds over the separation grid.
    Fisher,
    /// Exact and Monte Carlo MSE for each photon budget.
    MseScan,
    /// Parameter-to-error ratio and smallest resolvable separation.
    Per,
    /// Precision enhancement over direct intensity detection.
    Enhance,
    /// Exact MSE against the unbiased bound on an (epsilon, N) grid.
    BiasMap,
    /// Synthetic counts dataset in the estimate/calibrate schema.
    Simulate,
    /// Estimates and bootstrap spreads from a counts dataset.
    Estimate { data: PathBuf },
    /// Crosstalk fit from a counts dataset with known separations.
    Calibrate { data: PathBuf },
    /// Predistorted drive waveform for a target and a response spectrum.
    PulseCorrect { target: PathBuf, response: PathBuf },
    /// Response spectrum from a measured input/output waveform pair.
    PulseResponse { input: PathBuf, output: PathBuf },
}

impl CommonArgs {
    /// `--set` assignments in order, then the named flags, which therefore win.
    pub fn overrides(&self) -> Result<Vec<(String, String)>, RunError> {
        let mut o = self.set.iter().map(|s| parse_assignment(s)).collect::<Result<Vec<_>, _>>()?;
        let named = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("crosstalk.alpha", self.alpha.map(|v| format!("{v:?}"))),
            ("crosstalk.beta", self.beta.map(|v| format!("{v:?}"))),
            ("monte_carlo.trials", self.trials.map(|v| v.to_string())),
        ];
        o.extend(named.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
        Ok(o)
    }

    pub fn resolve(&self) -> Result<RunConfig, RunError> {
        RunConfig::load(self.config.as_deref(), &self.overrides()?)
    }
}

fn emit(out: Option<&Path>, body: &[u8], meta: &TableMeta) -> Result<(), RunError> {
    match out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
            meta.write(&sidecar_path(path))
        }
        None => std::io::stdout().write_all(body).map_err(|e| RunError::Io(e.to_string())),
    }
}

pub fn execute(cli: &Cli) -> Result<(), RunError> {
    init_thread_pool()?;
    let cfg = cli.common.resolve()?;
    let out = cli.common.out.as_deref();
    let table = match &cli.command {
        Command::Fisher => cmd::cmd_fisher(&cfg)?,
        Command::MseScan => cmd::cmd_mse_scan(&cfg)?,
        Command::Per => cmd::cmd_per(&cfg)?,
        Command::Enhance => cmd::cmd_enhance(&cfg)?,
        Command::BiasMap => cmd::cmd_bias_map(&cfg)?,
        Command::Estimate { data } => cmd::cmd_estimate(data, &cfg)?,
        Command::Calibrate { data } => cmd::cmd_calibrate(data, &cfg)?,
        Command::Simulate => {
            let (rows, meta) = cmd::cmd_simulate(&cfg)?;
            let mut buf = Vec::new();
            write_counts(&rows, &mut buf)?;
            return emit(out, &buf, &meta);
        }
        Command::PulseCorrect { target, response } => {
            let (w, meta) = cmd::cmd_pulse_correct(target, response, &cfg)?;
            let mut buf = Vec::new();
            w.write_csv(&mut buf)?;
            return emit(out, &buf, &meta);
        }
        Command::PulseResponse { input, output } => {
            let (r, meta) = cmd::cmd_pulse_response(input, output, &cfg)?;
            let mut buf = Vec::new();
            r.write_csv(&mut buf)?;
            return emit(out, &buf, &meta);
        }
    };
    for w in &table.meta.warnings {
        eprintln!("warning: {w}");
    }
    emit(out, table.to_csv().as_bytes(), &table.meta)
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("superres: {e}");
            e.exit_code()
        }
    }
}
