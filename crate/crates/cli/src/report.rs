//! Report data types and writers.
//!
//! Every command produces one or more reports carrying the same `meta` block
//! (radius, K, order, c2, tolerance, version) so runs remain self describing.
//! JSON is the primary format; CSV mirrors it as flat rows with the meta
//! columns repeated, which keeps spreadsheet import trivial.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use antiplane::greens::Gbar1Report;
use antiplane::{ConvergenceReport, DecayReport, SinclairReport, Site};

use crate::config::{Format, Resolved};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub order: u8,
    pub c2: Option<f64>,
    pub tol: f64,
    pub version: String,
}

impl Meta {
    pub fn new(cfg: &Resolved, c2: Option<f64>) -> Self {
        Meta {
            radius: cfg.radius,
            k: cfg.k,
            order: cfg.order,
            c2,
            tol: cfg.tol,
            version: VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellRow {
    pub r_mid: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDoc {
    pub meta: Meta,
    pub label: String,
    pub window: [f64; 2],
    pub slope: f64,
    pub shells: Vec<ShellRow>,
}

impl DecayDoc {
    pub fn new(meta: Meta, report: &DecayReport) -> Self {
        DecayDoc {
            meta,
            label: report.label.clone(),
            window: [report.window.0, report.window.1],
            slope: report.slope,
            shells: report
                .shells
                .iter()
                .map(|s| ShellRow {
                    r_mid: s.r_mid,
                    max: s.max_abs,
                    mean: s.mean_abs,
                    count: s.count,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDoc {
    pub meta: Meta,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub grad_inf: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceDoc {
    pub meta: Meta,
    pub predictor_order: u8,
    pub radii: Vec<f64>,
    pub errors: Vec<f64>,
    pub reference_radius: f64,
    pub fitted_order: f64,
}

impl ConvergenceDoc {
    pub fn new(meta: Meta, report: &ConvergenceReport) -> Self {
        ConvergenceDoc {
            meta,
            predictor_order: report.predictor_order,
            radii: report.radii.clone(),
            errors: report.errors.clone(),
            reference_radius: report.reference_radius,
            fitted_order: report.fitted_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinclairProbeRow {
    pub c1: f64,
    pub far_energy: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinclairDoc {
    pub meta: Meta,
    pub grid: Vec<SinclairProbeRow>,
    pub c1_star: f64,
    pub star_far_energy: f64,
    pub star_slope: f64,
    pub baseline_slope: f64,
    pub improvement: f64,
}

impl SinclairDoc {
    pub fn new(meta: Meta, report: &SinclairReport) -> Self {
        SinclairDoc {
            meta,
            grid: report
                .grid
                .iter()
                .map(|p| SinclairProbeRow {
                    c1: p.c1,
                    far_energy: p.far_energy,
                    slope: p.slope,
                })
                .collect(),
            c1_star: report.c1_star,
            star_far_energy: report.star_far_energy,
            star_slope: report.star_slope,
            baseline_slope: report.baseline_slope,
            improvement: report.improvement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryDoc {
    pub probe: [i32; 2],
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbar1Doc {
    pub status: String,
    pub corrected: Option<bool>,
    pub stat: Option<f64>,
    pub probes: Option<usize>,
}

impl Gbar1Doc {
    pub fn skipped(reason: &str) -> Self {
        Gbar1Doc {
            status: format!("skipped: {reason}"),
            corrected: None,
            stat: None,
            probes: None,
        }
    }

    pub fn done(report: &Gbar1Report) -> Self {
        Gbar1Doc {
            status: "ok".to_string(),
            corrected: Some(report.corrected),
            stat: Some(report.stat),
            probes: Some(report.probes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreensDoc {
    pub meta: Meta,
    pub source: [i32; 2],
    pub mu: String,
    pub residual_inf: f64,
    pub amplitude: f64,
    pub c2_source: f64,
    pub symmetry: SymmetryDoc,
    pub gbar1: Gbar1Doc,
}

/// Serialize to pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc)
        .map_err(|e| CliError::Io(format!("serialize {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Io(format!("write {}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    let file =
        File::create(path).map_err(|e| CliError::Io(format!("create {}: {e}", path.display())))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<(), CliError> {
    w.flush()
        .map_err(|e| CliError::Io(format!("write {}: {e}", path.display())))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io(format!("write {}: {e}", path.display()))
}

fn meta_header() -> [&'static str; 6] {
    ["R", "K", "order", "c2", "tol", "version"]
}

fn meta_fields(meta: &Meta) -> [String; 6] {
    [
        meta.radius.to_string(),
        meta.k.to_string(),
        meta.order.to_string(),
        meta.c2.map(|v| v.to_string()).unwrap_or_default(),
        meta.tol.to_string(),
        meta.version.clone(),
    ]
}

/// One row per shell, meta columns repeated so the file stands alone.
pub fn write_decay_csv(path: &Path, doc: &DecayDoc) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<&str> = meta_header().to_vec();
    header.extend([
        "label",
        "window_lo",
        "window_hi",
        "slope",
        "r_mid",
        "max",
        "mean",
        "count",
    ]);
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for shell in &doc.shells {
        let mut row: Vec<String> = meta_fields(&doc.meta).to_vec();
        row.extend([
            doc.label.clone(),
            doc.window[0].to_string(),
            doc.window[1].to_string(),
            doc.slope.to_string(),
            shell.r_mid.to_string(),
            shell.max.to_string(),
            shell.mean.to_string(),
            shell.count.to_string(),
        ]);
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(w, path)
}

/// One row per sample radius.
pub fn write_convergence_csv(path: &Path, doc: &ConvergenceDoc) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<&str> = meta_header().to_vec();
    header.extend([
        "predictor_order",
        "reference_radius",
        "fitted_order",
        "radius",
        "error",
    ]);
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (radius, error) in doc.radii.iter().zip(&doc.errors) {
        let mut row: Vec<String> = meta_fields(&doc.meta).to_vec();
        row.extend([
            doc.predictor_order.to_string(),
            doc.reference_radius.to_string(),
            doc.fitted_order.to_string(),
            radius.to_string(),
            error.to_string(),
        ]);
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(w, path)
}

/// One row per grid probe plus a final row for the refined optimum.
pub fn write_sinclair_csv(path: &Path, doc: &SinclairDoc) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<&str> = meta_header().to_vec();
    header.extend(["kind", "c1", "far_energy", "slope", "improvement"]);
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for probe in &doc.grid {
        let mut row: Vec<String> = meta_fields(&doc.meta).to_vec();
        row.extend([
            "grid".to_string(),
            probe.c1.to_string(),
            probe.far_energy.to_string(),
            probe.slope.to_string(),
            String::new(),
        ]);
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    let mut row: Vec<String> = meta_fields(&doc.meta).to_vec();
    row.extend([
        "star".to_string(),
        doc.c1_star.to_string(),
        doc.star_far_energy.to_string(),
        doc.star_slope.to_string(),
        doc.improvement.to_string(),
    ]);
    w.write_record(&row).map_err(|e| csv_err(path, e))?;
    finish(w, path)
}

/// Single row carrying the solver outcome.
pub fn write_solve_csv(path: &Path, doc: &SolveDoc) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<&str> = meta_header().to_vec();
    header.extend([
        "converged",
        "iterations",
        "evaluations",
        "grad_inf",
        "energy",
    ]);
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    let mut row: Vec<String> = meta_fields(&doc.meta).to_vec();
    row.extend([
        doc.converged.to_string(),
        doc.iterations.to_string(),
        doc.evaluations.to_string(),
        doc.grad_inf.to_string(),
        doc.energy.to_string(),
    ]);
    w.write_record(&row).map_err(|e| csv_err(path, e))?;
    finish(w, path)
}

/// Single row; the nested symmetry and gbar1 blocks are flattened.
pub fn write_greens_csv(path: &Path, doc: &GreensDoc) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<&str> = meta_header().to_vec();
    header.extend([
        "source_a",
        "source_b",
        "mu",
        "residual_inf",
        "amplitude",
        "c2_source",
        "symmetry_probe_a",
        "symmetry_probe_b",
        "symmetry_difference",
        "gbar1_status",
        "gbar1_corrected",
        "gbar1_stat",
        "gbar1_probes",
    ]);
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    let mut row: Vec<String> = meta_fields(&doc.meta).to_vec();
    row.extend([
        doc.source[0].to_string(),
        doc.source[1].to_string(),
        doc.mu.clone(),
        doc.residual_inf.to_string(),
        doc.amplitude.to_string(),
        doc.c2_source.to_string(),
        doc.symmetry.probe[0].to_string(),
        doc.symmetry.probe[1].to_string(),
        doc.symmetry.difference.to_string(),
        doc.gbar1.status.clone(),
        doc.gbar1.corrected.map(|v| v.to_string()).unwrap_or_default(),
        doc.gbar1.stat.map(|v| v.to_string()).unwrap_or_default(),
        doc.gbar1.probes.map(|v| v.to_string()).unwrap_or_default(),
    ]);
    w.write_record(&row).map_err(|e| csv_err(path, e))?;
    finish(w, path)
}

fn out_path(dir: &Path, stem: &str, format: Format) -> PathBuf {
    dir.join(format!("{stem}.{}", format.extension()))
}

/// Write a decay report in the configured format and return the path used.
pub fn write_decay(
    dir: &Path,
    stem: &str,
    format: Format,
    doc: &DecayDoc,
) -> Result<PathBuf, CliError> {
    let path = out_path(dir, stem, format);
    match format {
        Format::Json => write_json(&path, doc)?,
        Format::Csv => write_decay_csv(&path, doc)?,
    }
    Ok(path)
}

pub fn write_solve(
    dir: &Path,
    stem: &str,
    format: Format,
    doc: &SolveDoc,
) -> Result<PathBuf, CliError> {
    let path = out_path(dir, stem, format);
    match format {
        Format::Json => write_json(&path, doc)?,
        Format::Csv => write_solve_csv(&path, doc)?,
    }
    Ok(path)
}

pub fn write_convergence(
    dir: &Path,
    stem: &str,
    format: Format,
    doc: &ConvergenceDoc,
) -> Result<PathBuf, CliError> {
    let path = out_path(dir, stem, format);
    match format {
        Format::Json => write_json(&path, doc)?,
        Format::Csv => write_convergence_csv(&path, doc)?,
    }
    Ok(path)
}

pub fn write_sinclair(
    dir: &Path,
    stem: &str,
    format: Format,
    doc: &SinclairDoc,
) -> Result<PathBuf, CliError> {
    let path = out_path(dir, stem, format);
    match format {
        Format::Json => write_json(&path, doc)?,
        Format::Csv => write_sinclair_csv(&path, doc)?,
    }
    Ok(path)
}

pub fn write_greens(
    dir: &Path,
    stem: &str,
    format: Format,
    doc: &GreensDoc,
) -> Result<PathBuf, CliError> {
    let path = out_path(dir, stem, format);
    match format {
        Format::Json => write_json(&path, doc)?,
        Format::Csv => write_greens_csv(&path, doc)?,
    }
    Ok(path)
}

/// Plain text field snapshot: one `a b value` line per site, lexicographic in
/// (a, b), shortest round-trip float form so reruns diff byte for byte.
pub fn write_snapshot(
    path: &Path,
    rows: impl IntoIterator<Item = (Site, f64)>,
) -> Result<(), CliError> {
    let file =
        File::create(path).map_err(|e| CliError::Io(format!("create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let mut rows: Vec<(Site, f64)> = rows.into_iter().collect();
    rows.sort_by_key(|(s, _)| (s.a, s.b));
    for (site, value) in rows {
        writeln!(w, "{} {} {:e}", site.a, site.b, value)
            .map_err(|e| CliError::Io(format!("write {}: {e}", path.display())))?;
    }
    w.flush()
        .map_err(|e| CliError::Io(format!("write {}: {e}", path.display())))
}
