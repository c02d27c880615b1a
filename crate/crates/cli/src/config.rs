//! Command-line flags merged over an optional flat TOML file.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use hyperherm::experiment::{DEFAULT_ALPHA, DEFAULT_DT, DEFAULT_T_FINAL};
use hyperherm::SetKind;

pub const MAX_DIM: usize = 8;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Full,
    Rhc,
    Ohc,
    Adaptive,
    Smolyak,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Dimensions: `3`, `2,3,4` or `2..5` (inclusive)
    #[arg(long)]
    pub dim: Option<String>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Degree bound of full, rhc and ohc sets
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Table levels: `4`, `2,3` or `2..5`
    #[arg(long)]
    pub level: Option<String>,
    /// Degree bound of the full block of an adaptive set
    #[arg(long)]
    pub n1: Option<usize>,
    /// Number of leading coordinates in the full block
    #[arg(long)]
    pub d1: Option<usize>,
    /// Cross bound of the trailing block of an adaptive set
    #[arg(long)]
    pub n2: Option<usize>,
    /// Scaling factor, one value or one per coordinate (comma separated)
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Translation, one value or one per coordinate (comma separated)
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub tfinal: Option<f64>,
    /// Rule order: abscissa tables, or a tensor error rule for convergence
    #[arg(long)]
    pub quad_order: Option<usize>,
    /// Random seed of the rate suites
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV destination; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write operator and coefficient files for every convergence run
    #[arg(long)]
    pub dump_operator: bool,
    /// Add a wall-time column (makes output run-dependent)
    #[arg(long)]
    pub timing: bool,
    /// Flat TOML file with the same keys (underscores for dashes)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Keys of the configuration file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dim: Option<IntList>,
    pub kind: Option<KindArg>,
    pub n: Option<usize>,
    pub gamma: Option<f64>,
    pub level: Option<IntList>,
    pub n1: Option<usize>,
    pub d1: Option<usize>,
    pub n2: Option<usize>,
    pub alpha: Option<RealList>,
    pub beta: Option<RealList>,
    pub dt: Option<f64>,
    pub tfinal: Option<f64>,
    pub quad_order: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub dump_operator: Option<bool>,
    pub timing: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum IntList {
    One(usize),
    Many(Vec<usize>),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum RealList {
    One(f64),
    Many(Vec<f64>),
}

impl IntList {
    fn resolve(self) -> Result<Vec<usize>, ConfigError> {
        match self {
            IntList::One(v) => Ok(vec![v]),
            IntList::Many(v) => Ok(v),
            IntList::Text(s) => parse_int_list(&s),
        }
    }
}

impl RealList {
    fn resolve(self) -> Vec<f64> {
        match self {
            RealList::One(v) => vec![v],
            RealList::Many(v) => v,
        }
    }
}

/// `3`, `2,4,5` or `2..5` (inclusive).
pub fn parse_int_list(s: &str) -> Result<Vec<usize>, ConfigError> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let lo: usize = a.trim().parse().map_err(|_| ConfigError(format!("bad range start in '{s}'")))?;
        let hi: usize = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| ConfigError(format!("bad range end in '{s}'")))?;
        if hi < lo {
            return err(format!("empty range '{s}'"));
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| ConfigError(format!("bad integer '{t}' in '{s}'"))))
        .collect()
}

pub fn parse_real_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| ConfigError(format!("bad number '{t}' in '{s}'"))))
        .collect()
}

/// Fully resolved settings.
#[derive(Debug, Clone)]
pub struct Config {
    pub dims: Option<Vec<usize>>,
    pub kind: Option<KindArg>,
    pub n: Option<usize>,
    pub gamma: Option<f64>,
    pub levels: Option<Vec<usize>>,
    pub n1: Option<usize>,
    pub d1: Option<usize>,
    pub n2: Option<usize>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub dt: f64,
    pub t_final: f64,
    pub quad_order: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub dump_operator: bool,
    pub timing: bool,
}

pub fn load_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

impl Config {
    /// Flags win over file values, file values over defaults.
    pub fn resolve(args: &CommonArgs) -> Result<Self, ConfigError> {
        let file = match &args.config {
            Some(p) => load_file(p)?,
            None => FileConfig::default(),
        };
        let dims = match &args.dim {
            Some(s) => Some(parse_int_list(s)?),
            None => file.dim.map(IntList::resolve).transpose()?,
        };
        let levels = match &args.level {
            Some(s) => Some(parse_int_list(s)?),
            None => file.level.map(IntList::resolve).transpose()?,
        };
        let alpha = match &args.alpha {
            Some(s) => parse_real_list(s)?,
            None => file.alpha.map(RealList::resolve).unwrap_or_else(|| vec![DEFAULT_ALPHA]),
        };
        let beta = match &args.beta {
            Some(s) => parse_real_list(s)?,
            None => file.beta.map(RealList::resolve).unwrap_or_else(|| vec![0.0]),
        };
        let cfg = Config {
            dims,
            kind: args.kind.or(file.kind),
            n: args.n.or(file.n),
            gamma: args.gamma.or(file.gamma),
            levels,
            n1: args.n1.or(file.n1),
            d1: args.d1.or(file.d1),
            n2: args.n2.or(file.n2),
            alpha,
            beta,
            dt: args.dt.or(file.dt).unwrap_or(DEFAULT_DT),
            t_final: args.tfinal.or(file.tfinal).unwrap_or(DEFAULT_T_FINAL),
            quad_order: args.quad_order.or(file.quad_order),
            seed: args.seed.or(file.seed).unwrap_or(20240601),
            out: args.out.clone().or(file.out),
            dump_operator: args.dump_operator || file.dump_operator.unwrap_or(false),
            timing: args.timing || file.timing.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let Some(d) = &self.dims {
            if d.is_empty() || d.iter().any(|&v| v == 0 || v > MAX_DIM) {
                return err(format!("dimensions must lie in 1..={MAX_DIM}, got {d:?}"));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return err(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return err(format!("tfinal must be positive, got {}", self.t_final));
        }
        if self.alpha.is_empty() || self.alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return err(format!("alpha values must be positive, got {:?}", self.alpha));
        }
        if self.beta.is_empty() || self.beta.iter().any(|b| !b.is_finite()) {
            return err(format!("beta values must be finite, got {:?}", self.beta));
        }
        if self.quad_order == Some(0) {
            return err("quad-order must be positive");
        }
        if let Some(g) = self.gamma {
            if g.is_nan() || g >= 1.0 {
                return err(format!("gamma must be below 1, got {g}"));
            }
        }
        Ok(())
    }

    pub fn dims_or(&self, default: &[usize]) -> Vec<usize> {
        self.dims.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn levels_or(&self, default: &[usize]) -> Vec<usize> {
        self.levels.clone().unwrap_or_else(|| default.to_vec())
    }

    /// The index set kind for dimension `dim`; Smolyak sets take one table
    /// level each.
    pub fn set_kinds(&self, dim: usize, default_n: usize) -> Result<Vec<SetKind>, ConfigError> {
        let kind = self.kind.unwrap_or(KindArg::Rhc);
        let n = self.n.unwrap_or(default_n);
        Ok(match kind {
            KindArg::Full => vec![SetKind::Full { n }],
            KindArg::Rhc => vec![SetKind::Rhc { n }],
            KindArg::Ohc => vec![SetKind::Ohc {
                n,
                gamma: self.gamma.unwrap_or(0.5),
            }],
            KindArg::Adaptive => {
                let (Some(n1), Some(d1), Some(n2)) = (self.n1, self.d1, self.n2) else {
                    return err("adaptive sets need --n1, --d1 and --n2");
                };
                if d1 > dim {
                    return err(format!("d1 = {d1} exceeds dimension {dim}"));
                }
                vec![SetKind::DimAdaptive {
                    n1,
                    d1,
                    n2,
                    gamma: self.gamma.unwrap_or(0.5),
                }]
            }
            KindArg::Smolyak => self
                .levels_or(&[4])
                .into_iter()
                .map(|l| hyperherm::experiment::benchmark_kind(dim, l))
                .collect(),
        })
    }
}
