//! Run configuration: defaults, optional TOML file, command line flags.
//!
//! Precedence is flags over file over defaults, resolved field by field so a
//! config file can pin the common parameters while a flag overrides just one.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use antiplane::PairPotential;

use crate::CliError;

pub const DEFAULT_RADIUS: f64 = 256.0;
pub const DEFAULT_K: f64 = 0.4;
pub const DEFAULT_TOL: f64 = 1e-8;

/// How the order-2 coefficient is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum C2Choice {
    /// Calibrate against the discrete Green's function response.
    Auto,
    /// Use the given fixed value.
    Fixed(f64),
}

impl C2Choice {
    pub fn parse(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(C2Choice::Auto);
        }
        s.parse::<f64>()
            .map(C2Choice::Fixed)
            .map_err(|_| format!("expected a number or \"auto\", got {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("expected json or csv, got {other:?}")),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

pub fn parse_potential(s: &str) -> Result<PairPotential, String> {
    match s.to_ascii_lowercase().as_str() {
        "paper" => Ok(PairPotential::Saturating),
        "quadratic" => Ok(PairPotential::Quadratic),
        other => Err(format!("expected paper or quadratic, got {other:?}")),
    }
}

/// Optional settings read from a TOML file passed with `--config`.
///
/// Every field is optional; anything present fills in only where the command
/// line left a gap.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub radius: Option<f64>,
    pub k: Option<f64>,
    pub order: Option<u8>,
    pub c2: Option<FileC2>,
    pub potential: Option<String>,
    pub tol: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub radii: Option<Vec<f64>>,
    pub orders: Option<Vec<u8>>,
    pub source: Option<[i32; 2]>,
    pub mu: Option<String>,
}

/// TOML accepts `c2 = 0.1361` or `c2 = "auto"`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum FileC2 {
    Number(f64),
    Text(String),
}

impl FileC2 {
    fn resolve(&self) -> Result<C2Choice, String> {
        match self {
            FileC2::Number(v) => Ok(C2Choice::Fixed(*v)),
            FileC2::Text(s) => C2Choice::parse(s),
        }
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))
    }
}

/// Fully resolved parameters shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub radius: f64,
    pub k: f64,
    pub order: u8,
    pub c2: C2Choice,
    pub potential: PairPotential,
    pub tol: f64,
    pub window: Option<(f64, f64)>,
    pub out: PathBuf,
    pub format: Format,
    pub threads: usize,
    pub seed: u64,
}

/// Common flags carried by every subcommand; `None` means "not given".
#[derive(Debug, Default, clap::Args)]
pub struct CommonOpts {
    /// Domain radius R of the lattice ball.
    #[arg(long)]
    pub radius: Option<f64>,

    /// Stress intensity factor K of the leading predictor.
    #[arg(long)]
    pub k: Option<f64>,

    /// Predictor order (0, 1, or 2).
    #[arg(long)]
    pub order: Option<u8>,

    /// Order-2 coefficient: a number, or "auto" to calibrate.
    #[arg(long, value_parser = C2Choice::parse)]
    pub c2: Option<C2Choice>,

    /// Pair potential: paper or quadratic.
    #[arg(long, value_parser = parse_potential)]
    pub potential: Option<PairPotential>,

    /// Gradient tolerance for the nonlinear solver.
    #[arg(long)]
    pub tol: Option<f64>,

    /// Fit window "LO,HI" for decay slopes (defaults depend on R).
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(f64, f64)>,

    /// TOML file with any of the common settings.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Output directory (falls back to ANTIPLANE_OUT_DIR, then ".").
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Report format: json or csv.
    #[arg(long, value_parser = Format::parse)]
    pub format: Option<Format>,

    /// Worker cap for commands that parallelize.
    #[arg(long)]
    pub threads: Option<usize>,

    /// Seed for randomized test probes.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let mut parts = s.split(',');
    let lo = parts
        .next()
        .and_then(|p| p.trim().parse::<f64>().ok())
        .ok_or_else(|| format!("expected \"LO,HI\", got {s:?}"))?;
    let hi = parts
        .next()
        .and_then(|p| p.trim().parse::<f64>().ok())
        .ok_or_else(|| format!("expected \"LO,HI\", got {s:?}"))?;
    if parts.next().is_some() {
        return Err(format!("expected \"LO,HI\", got {s:?}"));
    }
    Ok((lo, hi))
}

pub fn parse_site(s: &str) -> Result<(i32, i32), String> {
    let mut parts = s.split(',');
    let a = parts
        .next()
        .and_then(|p| p.trim().parse::<i32>().ok())
        .ok_or_else(|| format!("expected \"A,B\", got {s:?}"))?;
    let b = parts
        .next()
        .and_then(|p| p.trim().parse::<i32>().ok())
        .ok_or_else(|| format!("expected \"A,B\", got {s:?}"))?;
    if parts.next().is_some() {
        return Err(format!("expected \"A,B\", got {s:?}"));
    }
    Ok((a, b))
}

impl CommonOpts {
    /// Merge flags, the optional config file, and defaults.
    pub fn resolve(&self) -> Result<(Resolved, FileConfig), CliError> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };

        let file_c2 = match &file.c2 {
            Some(c) => Some(c.resolve().map_err(CliError::Config)?),
            None => None,
        };
        let file_potential = match &file.potential {
            Some(p) => Some(parse_potential(p).map_err(CliError::Config)?),
            None => None,
        };
        let file_format = match &file.format {
            Some(f) => Some(Format::parse(f).map_err(CliError::Config)?),
            None => None,
        };

        let order = self.order.or(file.order).unwrap_or(0);
        if order > 2 {
            return Err(CliError::Config(format!(
                "order must be 0, 1, or 2, got {order}"
            )));
        }
        let radius = self.radius.or(file.radius).unwrap_or(DEFAULT_RADIUS);
        if !radius.is_finite() || radius <= 0.0 {
            return Err(CliError::Config(format!(
                "radius must be positive, got {radius}"
            )));
        }
        let tol = self.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
        if !tol.is_finite() || tol <= 0.0 {
            return Err(CliError::Config(format!("tol must be positive, got {tol}")));
        }
        let threads = self.threads.or(file.threads).unwrap_or(1).max(1);

        let out = match self.out.clone().or_else(|| file.out.clone()) {
            Some(dir) => dir,
            None => std::env::var_os("ANTIPLANE_OUT_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(".")),
        };

        let resolved = Resolved {
            radius,
            k: self.k.or(file.k).unwrap_or(DEFAULT_K),
            order,
            c2: self.c2.or(file_c2).unwrap_or(C2Choice::Auto),
            potential: self
                .potential
                .or(file_potential)
                .unwrap_or(PairPotential::Saturating),
            tol,
            window: self.window.or(file.window.map(|[lo, hi]| (lo, hi))),
            out,
            format: self.format.or(file_format).unwrap_or(Format::Json),
            threads,
            seed: self.seed.or(file.seed).unwrap_or(0),
        };
        Ok((resolved, file))
    }
}
