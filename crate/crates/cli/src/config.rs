//! Flat `key = value` run configuration with flag overrides.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use bloch_nitsche::assembly::{DEFAULT_LAMBDA_HAT, DEFAULT_M_ARC};
use bloch_nitsche::geometry::honeycomb_inclusions;
use bloch_nitsche::material::{MaterialParams, WallKind, WeightForm};
use bloch_nitsche::HexLattice64;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {message}")]
    Read { path: String, message: String },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}` (expected {expected})")]
    Parse {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("key `{key}`: value {value} out of range (accepted: {range})")]
    OutOfRange { key: String, value: String, range: String },
    #[error("key `{key}`: material is not elliptic: {message}")]
    NotElliptic { key: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    BulkBands,
    EdgeBands,
    Convergence,
    SpectralBands,
    Modes,
    Check,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::BulkBands => "bulk-bands",
            Mode::EdgeBands => "edge-bands",
            Mode::Convergence => "convergence",
            Mode::SpectralBands => "spectral-bands",
            Mode::Modes => "modes",
            Mode::Check => "check",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Mode::BulkBands,
            Mode::EdgeBands,
            Mode::Convergence,
            Mode::SpectralBands,
            Mode::Modes,
            Mode::Check,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }

    /// Whether the run uses the domain-wall material.
    pub fn is_edge(&self) -> bool {
        matches!(self, Mode::EdgeBands | Mode::Modes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KPath {
    /// `Gamma -> K -> M -> Gamma`.
    Gkmg,
    /// Boundary of the hexagonal dual cell.
    DualBoundary,
}

/// Quasimomentum of a torus convergence study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KPoint {
    Gamma,
    K,
    M,
    Custom(f64, f64),
}

/// Validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub j: f64,
    pub gamma: f64,
    pub delta: f64,
    pub kappa_inf: f64,
    pub wall: WallKind,
    pub weight_form: WeightForm,
    pub radius: f64,
    pub n: usize,
    pub l: usize,
    pub lambda_hat: f64,
    pub m_arc: usize,
    /// `None` lets edge runs estimate the count from the envelope.
    pub nev: Option<usize>,
    pub kpath: KPath,
    pub samples_per_leg: usize,
    pub kpar_samples: usize,
    /// Parallel quasimomentum of `modes` and cylinder convergence runs.
    pub kpar: f64,
    pub k: KPoint,
    /// Convergence on the cylinder instead of the torus.
    pub cylinder: bool,
    pub n_list: Vec<usize>,
    pub spectral_m: usize,
    pub grid_res: usize,
    /// 1-based mode indices to dump; empty selects the in-gap modes.
    pub dump_modes: Vec<usize>,
    pub envelope_bands: usize,
    pub lambda_samples: usize,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn defaults(mode: Mode) -> Self {
        Self {
            mode,
            j: 2.0,
            gamma: 0.0,
            delta: 0.6,
            kappa_inf: 1.0,
            wall: WallKind::Step,
            weight_form: WeightForm::FirstOrder,
            radius: 0.2,
            n: 16,
            l: 20,
            lambda_hat: DEFAULT_LAMBDA_HAT,
            m_arc: DEFAULT_M_ARC,
            nev: None,
            kpath: KPath::Gkmg,
            samples_per_leg: 10,
            kpar_samples: 21,
            kpar: 2.0 * PI / 3.0,
            k: KPoint::K,
            cylinder: false,
            n_list: vec![8, 16, 32, 64],
            spectral_m: 16,
            grid_res: 128,
            dump_modes: Vec::new(),
            envelope_bands: 4,
            lambda_samples: 21,
            out: PathBuf::from("out"),
            threads: None,
        }
    }

    /// Bulk material (`gamma` constant) or the domain-wall material.
    pub fn material(&self) -> MaterialParams<f64> {
        if self.mode.is_edge() || (self.mode == Mode::Convergence && self.cylinder) {
            MaterialParams::edge(self.j, self.delta, self.kappa_inf, self.wall)
        } else {
            MaterialParams::bulk(self.j, self.gamma, self.weight_form)
        }
        .expect("validated material")
    }

    /// Eigenpairs per sample for bulk-type runs.
    pub fn bulk_nev(&self) -> usize {
        self.nev.unwrap_or(6)
    }
}

/// Keys accepted in config files and `--set`.
pub const KEYS: &[&str] = &[
    "mode",
    "j",
    "gamma",
    "delta",
    "kappa_inf",
    "wall",
    "weight_form",
    "radius",
    "n",
    "l",
    "lambda_hat",
    "m_arc",
    "nev",
    "kpath",
    "samples_per_leg",
    "kpar_samples",
    "kpar",
    "k",
    "problem",
    "n_list",
    "spectral_m",
    "grid_res",
    "dump_modes",
    "envelope_bands",
    "lambda_samples",
    "out",
    "threads",
];

/// Canonical key: lower case with `-` mapped to `_`.
pub fn canonical_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        };
        let key = canonical_key(k);
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(k.trim().to_string()));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config_file(path: &std::path::Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config_text(&text)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str, expected: &'static str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::Parse {
        key: key.into(),
        value: v.into(),
        expected,
    })
}

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>, ConfigError> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s.trim(), "comma-separated positive integers"))
        .collect()
}

/// Accepts plain numbers and multiples of pi such as `2pi/3` or `0.56pi`.
pub fn parse_angle(key: &str, v: &str) -> Result<f64, ConfigError> {
    let bad = || ConfigError::Parse {
        key: key.into(),
        value: v.into(),
        expected: "a number or a multiple of pi such as 2pi/3",
    };
    let s = v.trim().replace(' ', "");
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<f64>().map_err(|_| bad())?),
        None => (s.clone(), 1.0),
    };
    let value = if let Some(coef) = num.strip_suffix("pi") {
        let c = if coef.is_empty() {
            1.0
        } else {
            coef.parse::<f64>().map_err(|_| bad())?
        };
        c * PI
    } else {
        num.parse::<f64>().map_err(|_| bad())?
    };
    Ok(value / den)
}

fn range_err(key: &str, value: impl ToString, range: &str) -> ConfigError {
    ConfigError::OutOfRange {
        key: key.into(),
        value: value.to_string(),
        range: range.into(),
    }
}

/// Applies `pairs` (already canonical) on top of the mode defaults and validates.
pub fn build_config(mode: Mode, pairs: &BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
    let mut c = RunConfig::defaults(mode);
    for (key, v) in pairs {
        let k = key.as_str();
        match k {
            "mode" => {
                // The subcommand decides the mode; a file value must agree or be absent.
                if Mode::parse(v).is_none() {
                    return Err(range_err(
                        k,
                        v,
                        "bulk-bands | edge-bands | convergence | spectral-bands | modes | check",
                    ));
                }
            }
            "j" => c.j = parse_num(k, v, "a number")?,
            "gamma" => c.gamma = parse_num(k, v, "a number")?,
            "delta" => c.delta = parse_num(k, v, "a number")?,
            "kappa_inf" => c.kappa_inf = parse_num(k, v, "a number")?,
            "wall" => {
                c.wall = match v.as_str() {
                    "step" => WallKind::Step,
                    "tanh" => WallKind::Tanh,
                    _ => return Err(range_err(k, v, "step | tanh")),
                }
            }
            "weight_form" => {
                c.weight_form = match v.as_str() {
                    "first-order" => WeightForm::FirstOrder,
                    "exact-inverse" => WeightForm::ExactInverse,
                    _ => return Err(range_err(k, v, "first-order | exact-inverse")),
                }
            }
            "radius" => c.radius = parse_num(k, v, "a number")?,
            "n" => c.n = parse_num(k, v, "a positive integer")?,
            "l" => c.l = parse_num(k, v, "a positive integer")?,
            "lambda_hat" => c.lambda_hat = parse_num(k, v, "a number")?,
            "m_arc" => c.m_arc = parse_num(k, v, "a positive integer")?,
            "nev" => c.nev = Some(parse_num(k, v, "a positive integer")?),
            "kpath" => {
                c.kpath = match v.as_str() {
                    "gkmg" | "G-K-M-G" => KPath::Gkmg,
                    "dual-boundary" => KPath::DualBoundary,
                    _ => return Err(range_err(k, v, "gkmg | dual-boundary")),
                }
            }
            "samples_per_leg" => c.samples_per_leg = parse_num(k, v, "a positive integer")?,
            "kpar_samples" => c.kpar_samples = parse_num(k, v, "a positive integer")?,
            "kpar" => c.kpar = parse_angle(k, v)?,
            "k" => {
                c.k = match v.as_str() {
                    "G" | "Gamma" => KPoint::Gamma,
                    "K" => KPoint::K,
                    "M" => KPoint::M,
                    other => {
                        let parts: Vec<&str> = other.split(',').collect();
                        if parts.len() != 2 {
                            return Err(range_err(k, v, "G | K | M | kx,ky"));
                        }
                        KPoint::Custom(
                            parse_num(k, parts[0].trim(), "a number")?,
                            parse_num(k, parts[1].trim(), "a number")?,
                        )
                    }
                }
            }
            "problem" => {
                c.cylinder = match v.as_str() {
                    "torus" => false,
                    "cylinder" => true,
                    _ => return Err(range_err(k, v, "torus | cylinder")),
                }
            }
            "n_list" => c.n_list = parse_list(k, v)?,
            "spectral_m" => c.spectral_m = parse_num(k, v, "a positive even integer")?,
            "grid_res" => c.grid_res = parse_num(k, v, "a positive integer")?,
            "dump_modes" => c.dump_modes = parse_list(k, v)?,
            "envelope_bands" => c.envelope_bands = parse_num(k, v, "a positive integer")?,
            "lambda_samples" => c.lambda_samples = parse_num(k, v, "a positive integer")?,
            "out" => c.out = PathBuf::from(v),
            "threads" => c.threads = Some(parse_num(k, v, "a positive integer")?),
            _ => return Err(ConfigError::UnknownKey(k.to_string())),
        }
    }
    validate(&c)?;
    Ok(c)
}

fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    if !(2..=4096).contains(&c.n) {
        return Err(range_err("N", c.n, "2..=4096"));
    }
    if !(1..=10_000).contains(&c.l) {
        return Err(range_err("L", c.l, "1..=10000"));
    }
    if c.nev == Some(0) {
        return Err(range_err("nev", 0, ">= 1"));
    }
    if !(c.lambda_hat > 0.0 && c.lambda_hat.is_finite()) {
        return Err(range_err("lambda_hat", c.lambda_hat, "> 0"));
    }
    if !(1..=64).contains(&c.m_arc) {
        return Err(range_err("m_arc", c.m_arc, "1..=64"));
    }
    for (key, v) in [
        ("samples_per_leg", c.samples_per_leg),
        ("kpar_samples", c.kpar_samples),
        ("envelope_bands", c.envelope_bands),
    ] {
        if v == 0 {
            return Err(range_err(key, v, ">= 1"));
        }
    }
    if c.lambda_samples < 2 {
        return Err(range_err("lambda_samples", c.lambda_samples, ">= 2"));
    }
    if c.grid_res < 2 {
        return Err(range_err("grid_res", c.grid_res, ">= 2"));
    }
    if c.spectral_m < 2 || !c.spectral_m.is_multiple_of(2) {
        return Err(range_err("spectral_m", c.spectral_m, "even, >= 2"));
    }
    if c.threads == Some(0) {
        return Err(range_err("threads", 0, ">= 1"));
    }
    if c.n_list.len() < 3 || c.n_list.windows(2).any(|w| w[0] >= w[1]) || c.n_list[0] < 2 {
        let shown: Vec<String> = c.n_list.iter().map(|n| n.to_string()).collect();
        return Err(range_err(
            "n_list",
            shown.join(","),
            "at least three strictly increasing values >= 2",
        ));
    }
    if c.dump_modes.contains(&0) {
        return Err(range_err("dump_modes", 0, "1-based indices"));
    }
    if !(c.radius > 0.0) || honeycomb_inclusions(&HexLattice64::honeycomb(), c.radius).is_err() {
        return Err(range_err("radius", c.radius, "0 < r < |A - B| / 2"));
    }
    // Both materials are checked so `check` catches either configuration.
    MaterialParams::bulk(c.j, c.gamma, c.weight_form).map_err(|e| ConfigError::NotElliptic {
        key: if 1.0 + c.j <= 0.0 { "J" } else { "gamma" }.into(),
        message: e.to_string(),
    })?;
    if c.mode.is_edge() || c.cylinder || c.mode == Mode::Check {
        MaterialParams::edge(c.j, c.delta, c.kappa_inf, c.wall).map_err(|e| ConfigError::NotElliptic {
            key: if 1.0 + c.j <= 0.0 {
                "J"
            } else if !(c.kappa_inf > 0.0) {
                "kappa_inf"
            } else {
                "delta"
            }
            .into(),
            message: e.to_string(),
        })?;
    }
    Ok(())
}
