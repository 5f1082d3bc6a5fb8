//! Command-line front end: config resolution, run dispatch and output writers.

pub mod config;
pub mod output;
pub mod run;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{build_config, canonical_key, read_config_file, ConfigError, Mode, RunConfig, KEYS};

/// Environment variable capping the worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "BLOCH_NITSCHE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "bloch-nitsche",
    version,
    about = "Unfitted Nitsche band structures of honeycomb photonic crystals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bulk dispersion along a quasimomentum path.
    BulkBands(Flags),
    /// Cylinder sweep over the parallel quasimomentum with mode classification.
    EdgeBands(Flags),
    /// Successive-refinement eigenvalue errors and slopes.
    Convergence(Flags),
    /// Plane-wave reference dispersion.
    SpectralBands(Flags),
    /// Cylinder modes at one parallel quasimomentum with field dumps.
    Modes(Flags),
    /// Validates the material and the interface assumption.
    Check(Flags),
}

impl Command {
    pub fn mode_and_flags(&self) -> (Mode, &Flags) {
        match self {
            Command::BulkBands(f) => (Mode::BulkBands, f),
            Command::EdgeBands(f) => (Mode::EdgeBands, f),
            Command::Convergence(f) => (Mode::Convergence, f),
            Command::SpectralBands(f) => (Mode::SpectralBands, f),
            Command::Modes(f) => (Mode::Modes, f),
            Command::Check(f) => (Mode::Check, f),
        }
    }
}

/// Flags shared by all subcommands; they override config-file values.
#[derive(Clone, Debug, Default, Args)]
pub struct Flags {
    /// `key = value` config file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Mesh resolution per lattice period.
    #[arg(long = "N", value_name = "N")]
    pub n: Option<String>,
    /// Cylinder half-length in periods.
    #[arg(long = "L", value_name = "L")]
    pub l: Option<String>,
    /// Permittivity contrast, eps = 1 + J inside the inclusions.
    #[arg(long = "J", value_name = "J", allow_hyphen_values = true)]
    pub j: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    #[arg(long = "lambda-hat", allow_hyphen_values = true)]
    pub lambda_hat: Option<String>,
    #[arg(long)]
    pub nev: Option<String>,
    /// `gkmg` or `dual-boundary`.
    #[arg(long)]
    pub kpath: Option<String>,
    #[arg(long = "kpar-samples")]
    pub kpar_samples: Option<String>,
    /// Worker threads; overrides the environment cap.
    #[arg(long)]
    pub threads: Option<String>,
    /// Any config key, e.g. `--set kpar=2pi/3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Merges file, environment and flags (in increasing priority) into a config.
pub fn resolve(mode: Mode, flags: &Flags, env_threads: Option<&str>) -> Result<RunConfig, ConfigError> {
    let mut pairs: BTreeMap<String, String> = match &flags.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    if let Some(t) = env_threads {
        pairs.entry("threads".into()).or_insert_with(|| t.trim().to_string());
    }
    for raw in &flags.set {
        let (k, v) = raw.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: raw.clone(),
        })?;
        let key = canonical_key(k);
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(k.trim().to_string()));
        }
        pairs.insert(key, v.trim().to_string());
    }
    let named = [
        ("n", &flags.n),
        ("l", &flags.l),
        ("j", &flags.j),
        ("gamma", &flags.gamma),
        ("delta", &flags.delta),
        ("lambda_hat", &flags.lambda_hat),
        ("nev", &flags.nev),
        ("kpath", &flags.kpath),
        ("kpar_samples", &flags.kpar_samples),
        ("threads", &flags.threads),
    ];
    for (key, value) in named {
        if let Some(v) = value {
            pairs.insert(key.into(), v.trim().to_string());
        }
    }
    if let Some(out) = &flags.out {
        pairs.insert("out".into(), out.display().to_string());
    }
    build_config(mode, &pairs)
}
