//! Run configuration: a flat `key = value` file merged under command-line
//! flags. Keys are the long flag names without the leading dashes.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use sphere_ricci::identities::BatteryConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("config key {0:?} given twice")]
    Duplicate(String),
    #[error("invalid value {value:?} for {key}: {reason}")]
    Value {
        key: String,
        value: String,
        reason: String,
    },
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
}

/// Flags shared by every subcommand. Everything is optional so that a value
/// left unset falls through to the config file and then to the default.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// Flat `key = value` config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Band limit L.
    #[arg(long)]
    pub lmax: Option<String>,
    #[arg(long)]
    pub oversample: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Highest degree of random initial data.
    #[arg(long)]
    pub l_max_data: Option<String>,
    /// Mean of random initial data.
    #[arg(long)]
    pub floor: Option<String>,
    /// Sup-norm bound of the random perturbation.
    #[arg(long)]
    pub amplitude: Option<String>,
    /// round | kr | random | file:PATH
    #[arg(long)]
    pub init: Option<String>,
    /// Constant term of round or King–Rosenau data.
    #[arg(long)]
    pub a0: Option<String>,
    /// x₃² coefficient of King–Rosenau data.
    #[arg(long)]
    pub b0: Option<String>,
    #[arg(long)]
    pub t_end: Option<String>,
    /// `auto` or a positive step.
    #[arg(long)]
    pub dt: Option<String>,
    /// Record every n-th flow step.
    #[arg(long)]
    pub stride: Option<String>,
    /// Comma-separated exponents of the J energies.
    #[arg(long)]
    pub alphas: Option<String>,
    /// Relative tolerance of the random-data Q-equation residual.
    #[arg(long)]
    pub tol: Option<String>,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<String>,
    /// CSV output path.
    #[arg(long)]
    pub csv: Option<String>,
    /// Comma-separated band limits of a convergence sweep.
    #[arg(long)]
    pub lmax_list: Option<String>,
    /// Negative control: corrupt the trace part of TF(b).
    #[arg(long, hide = true)]
    pub inject_z_bug: bool,
}

const KEYS: [&str; 18] = [
    "lmax",
    "oversample",
    "seed",
    "l-max-data",
    "floor",
    "amplitude",
    "init",
    "a0",
    "b0",
    "t-end",
    "dt",
    "stride",
    "alphas",
    "tol",
    "report",
    "csv",
    "lmax-list",
    "inject-z-bug",
];

#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    Round,
    Kr,
    Random,
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dt {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub band_limit: usize,
    pub oversample: usize,
    pub seed: u64,
    pub l_max_data: usize,
    pub floor: f64,
    pub amplitude: f64,
    pub init: Init,
    pub a0: f64,
    pub b0: f64,
    pub t_end: f64,
    pub dt: Dt,
    pub stride: usize,
    pub alphas: Vec<f64>,
    pub tol: f64,
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub lmax_list: Vec<usize>,
    pub inject_z_bug: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let b = BatteryConfig::default();
        Self {
            band_limit: b.band_limit,
            oversample: b.oversample,
            seed: b.seed,
            l_max_data: b.l_max_data,
            floor: b.floor,
            amplitude: b.amplitude,
            init: Init::Round,
            a0: 1.0,
            b0: 0.5,
            t_end: 0.1,
            dt: Dt::Auto,
            stride: 10,
            alphas: vec![0.0, 1.0, 2.0],
            tol: b.tol,
            report: None,
            csv: None,
            lmax_list: vec![16, 24, 32, 48],
            inject_z_bug: false,
        }
    }
}

impl RunConfig {
    pub fn battery(&self) -> BatteryConfig {
        BatteryConfig {
            band_limit: self.band_limit,
            oversample: self.oversample,
            seed: self.seed,
            l_max_data: self.l_max_data,
            floor: self.floor,
            amplitude: self.amplitude,
            tol: self.tol,
            inject_z_bug: self.inject_z_bug,
        }
    }

    /// Defaults, overridden by the config file, overridden by flags.
    pub fn resolve(flags: &Flags) -> Result<Self, ConfigError> {
        let mut entries = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.clone(),
                    source,
                })?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        let given = [
            ("lmax", &flags.lmax),
            ("oversample", &flags.oversample),
            ("seed", &flags.seed),
            ("l-max-data", &flags.l_max_data),
            ("floor", &flags.floor),
            ("amplitude", &flags.amplitude),
            ("init", &flags.init),
            ("a0", &flags.a0),
            ("b0", &flags.b0),
            ("t-end", &flags.t_end),
            ("dt", &flags.dt),
            ("stride", &flags.stride),
            ("alphas", &flags.alphas),
            ("tol", &flags.tol),
            ("report", &flags.report),
            ("csv", &flags.csv),
            ("lmax-list", &flags.lmax_list),
        ];
        for (key, value) in given {
            if let Some(v) = value {
                entries.insert(key.to_string(), v.clone());
            }
        }
        if flags.inject_z_bug {
            entries.insert("inject-z-bug".into(), "true".into());
        }
        Self::from_entries(&entries)
    }

    pub fn from_entries(entries: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (key, value) in entries {
            let bad = |reason: &str| ConfigError::Value {
                key: key.clone(),
                value: value.clone(),
                reason: reason.to_string(),
            };
            let v = value.as_str();
            match key.as_str() {
                "lmax" => cfg.band_limit = v.parse().map_err(|_| bad("expected an integer"))?,
                "oversample" => cfg.oversample = v.parse().map_err(|_| bad("expected an integer"))?,
                "seed" => cfg.seed = v.parse().map_err(|_| bad("expected an integer"))?,
                "l-max-data" => cfg.l_max_data = v.parse().map_err(|_| bad("expected an integer"))?,
                "floor" => cfg.floor = finite(v).ok_or_else(|| bad("expected a number"))?,
                "amplitude" => cfg.amplitude = finite(v).ok_or_else(|| bad("expected a number"))?,
                "init" => {
                    cfg.init = parse_init(v).ok_or_else(|| bad("expected round, kr, random or file:PATH"))?
                }
                "a0" => cfg.a0 = finite(v).ok_or_else(|| bad("expected a number"))?,
                "b0" => cfg.b0 = finite(v).ok_or_else(|| bad("expected a number"))?,
                "t-end" => {
                    cfg.t_end = finite(v)
                        .filter(|t| *t > 0.0)
                        .ok_or_else(|| bad("expected a positive number"))?
                }
                "dt" => {
                    cfg.dt = if v == "auto" {
                        Dt::Auto
                    } else {
                        Dt::Fixed(
                            finite(v)
                                .filter(|t| *t > 0.0)
                                .ok_or_else(|| bad("expected auto or a positive number"))?,
                        )
                    }
                }
                "stride" => {
                    cfg.stride = v
                        .parse()
                        .ok()
                        .filter(|s| *s > 0)
                        .ok_or_else(|| bad("expected a positive integer"))?
                }
                "alphas" => {
                    cfg.alphas = list(v, finite)
                        .filter(|a| !a.is_empty())
                        .ok_or_else(|| bad("expected numbers separated by commas"))?
                }
                "tol" => {
                    cfg.tol = finite(v)
                        .filter(|t| *t > 0.0)
                        .ok_or_else(|| bad("expected a positive number"))?
                }
                "report" => cfg.report = Some(PathBuf::from(v)),
                "csv" => cfg.csv = Some(PathBuf::from(v)),
                "lmax-list" => {
                    cfg.lmax_list = list(v, |s| s.parse().ok())
                        .filter(|l| !l.is_empty())
                        .ok_or_else(|| bad("expected integers separated by commas"))?
                }
                "inject-z-bug" => cfg.inject_z_bug = v.parse().map_err(|_| bad("expected true or false"))?,
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        Ok(cfg)
    }
}

/// Parses `key = value` lines; `#` starts a comment. Underscores in keys are
/// read as dashes, so `t_end` and `t-end` name the same setting.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: n + 1,
            text: raw.to_string(),
        })?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(ConfigError::Duplicate(key));
        }
    }
    Ok(out)
}

fn finite(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn list<T>(s: &str, parse: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    s.split(',').map(|p| parse(p.trim())).collect()
}

fn parse_init(s: &str) -> Option<Init> {
    match s {
        "round" => Some(Init::Round),
        "kr" => Some(Init::Kr),
        "random" => Some(Init::Random),
        _ => s
            .strip_prefix("file:")
            .filter(|p| !p.is_empty())
            .map(|p| Init::File(PathBuf::from(p))),
    }
}
