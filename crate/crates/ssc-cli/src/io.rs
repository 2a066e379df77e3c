//! CSV and manifest emission/ingestion.
//!
//! Numbers are written as `{:.16e}` — 17 significant digits — so every
//! f64 round-trips bit-exactly through its own readers. Points files
//! carry an `x0..x{n-1}` header with one point per row; label files are a
//! single headerless column of 1-based ids; matrices are dense and
//! headerless; manifests are flat `key=value` lines.

use crate::CliError;
use ssc_core::metrics::MetricsReport;
use ssc_core::Matrix;
use std::path::Path;

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn read_fail(path: &Path, detail: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("cannot read {}: {detail}", path.display()))
}

fn write_fail(path: &Path, detail: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("cannot write {}: {detail}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| write_fail(path, e))
}

/// Points CSV: header `x0,...,x{n-1}`, one point per row.
pub fn write_points(path: &Path, points: &Matrix) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let header: Vec<String> = (0..points.ncols()).map(|j| format!("x{j}")).collect();
    w.write_record(&header).map_err(|e| write_fail(path, e))?;
    for i in 0..points.nrows() {
        let row: Vec<String> = (0..points.ncols())
            .map(|j| format_float(points[(i, j)]))
            .collect();
        w.write_record(&row).map_err(|e| write_fail(path, e))?;
    }
    w.flush().map_err(|e| write_fail(path, e))
}

pub fn read_points(path: &Path) -> Result<Matrix, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| read_fail(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| read_fail(path, e))?;
        let row = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| read_fail(path, format!("bad number: {e}")))?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(read_fail(path, "rows have inconsistent widths"));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(read_fail(path, "no data rows"));
    }
    let (n, d) = (rows.len(), rows[0].len());
    Ok(Matrix::from_fn(n, d, |i, j| rows[i][j]))
}

/// Labels CSV: one 1-based id per line, no header.
pub fn write_labels(path: &Path, labels: &[usize]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    for &l in labels {
        w.write_record([l.to_string()]).map_err(|e| write_fail(path, e))?;
    }
    w.flush().map_err(|e| write_fail(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| read_fail(path, e))?;
    let mut labels = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| read_fail(path, e))?;
        let field = record
            .get(0)
            .ok_or_else(|| read_fail(path, "empty label row"))?;
        let id: usize = field
            .trim()
            .parse()
            .map_err(|e| read_fail(path, format!("bad label `{field}`: {e}")))?;
        if id == 0 {
            return Err(read_fail(path, "labels are 1-based; found 0"));
        }
        labels.push(id);
    }
    if labels.is_empty() {
        return Err(read_fail(path, "no labels"));
    }
    Ok(labels)
}

/// Dense matrix CSV, headerless.
pub fn write_matrix(path: &Path, m: &Matrix) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_float(m[(i, j)])).collect();
        w.write_record(&row).map_err(|e| write_fail(path, e))?;
    }
    w.flush().map_err(|e| write_fail(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| read_fail(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| read_fail(path, e))?;
        let row = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| read_fail(path, format!("bad number: {e}")))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(read_fail(path, "no rows"));
    }
    let (n, d) = (rows.len(), rows[0].len());
    if rows.iter().any(|r| r.len() != d) {
        return Err(read_fail(path, "rows have inconsistent widths"));
    }
    Ok(Matrix::from_fn(n, d, |i, j| rows[i][j]))
}

/// Flat `key=value` manifest, one entry per line, written in the order
/// given.
pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<(), CliError> {
    let mut text = String::new();
    for (k, v) in entries {
        text.push_str(k);
        text.push('=');
        text.push_str(v);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| write_fail(path, e))
}

/// Metrics CSV: a header naming only the metrics that are available,
/// then a single value row.
pub fn write_metrics(path: &Path, report: &MetricsReport) -> Result<(), CliError> {
    let mut header: Vec<&str> = Vec::new();
    let mut row: Vec<String> = Vec::new();
    if let Some(tnr) = report.tnr {
        header.push("tnr");
        row.push(format_float(tnr));
        header.push("tnr_vacuous");
        row.push(report.tnr_vacuous.to_string());
    }
    header.push("anrn");
    row.push(format_float(report.anrn));
    if let Some(ccr) = report.ccr {
        header.push("ccr");
        row.push(format_float(ccr));
    }
    let mut w = csv_writer(path)?;
    w.write_record(&header).map_err(|e| write_fail(path, e))?;
    w.write_record(&row).map_err(|e| write_fail(path, e))?;
    w.flush().map_err(|e| write_fail(path, e))
}

/// One long-form sweep row: a (cell, metric) aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub phi: f64,
    pub sigma: f64,
    pub p: usize,
    pub metric: &'static str,
    pub mean: f64,
    pub std: f64,
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["rho", "phi", "sigma", "p", "metric", "mean", "std"])
        .map_err(|e| write_fail(path, e))?;
    for r in rows {
        w.write_record([
            format_float(r.rho),
            format_float(r.phi),
            format_float(r.sigma),
            r.p.to_string(),
            r.metric.to_string(),
            format_float(r.mean),
            format_float(r.std),
        ])
        .map_err(|e| write_fail(path, e))?;
    }
    w.flush().map_err(|e| write_fail(path, e))
}

/// One neighbor-quality row: per batch size and 1-based neighbor index.
#[derive(Debug, Clone, PartialEq)]
pub struct AodRow {
    pub p: usize,
    pub neighbor: usize,
    pub mean_aod: f64,
    pub true_rate: f64,
}

pub fn write_aod(path: &Path, rows: &[AodRow]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["p", "neighbor", "mean_aod_rad", "true_rate"])
        .map_err(|e| write_fail(path, e))?;
    for r in rows {
        w.write_record([
            r.p.to_string(),
            r.neighbor.to_string(),
            format_float(r.mean_aod),
            format_float(r.true_rate),
        ])
        .map_err(|e| write_fail(path, e))?;
    }
    w.flush().map_err(|e| write_fail(path, e))
}

/// One row of evaluated bounds at a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub sigma: f64,
    pub tau: f64,
    pub p: usize,
    pub k_total: usize,
    pub k_comp: usize,
    pub global: (f64, bool),
    pub halting: (f64, bool),
    pub gomp_form: (f64, bool),
    pub omp_form: (f64, bool),
    /// (lhs, rhs, pass) of the separation condition, when affinities
    /// were supplied.
    pub separation: Option<(f64, f64, bool)>,
}

pub fn write_bounds(path: &Path, rows: &[BoundsRow]) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "sigma",
        "tau",
        "p",
        "k_total",
        "k_comp",
        "global",
        "global_vacuous",
        "halting",
        "halting_vacuous",
        "gomp_form",
        "gomp_form_vacuous",
        "omp_form",
        "omp_form_vacuous",
        "separation_lhs",
        "separation_rhs",
        "separation_pass",
    ])
    .map_err(|e| write_fail(path, e))?;
    for r in rows {
        let (sep_lhs, sep_rhs, sep_pass) = match r.separation {
            Some((lhs, rhs, pass)) => (format_float(lhs), format_float(rhs), pass.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            format_float(r.sigma),
            format_float(r.tau),
            r.p.to_string(),
            r.k_total.to_string(),
            r.k_comp.to_string(),
            format_float(r.global.0),
            r.global.1.to_string(),
            format_float(r.halting.0),
            r.halting.1.to_string(),
            format_float(r.gomp_form.0),
            r.gomp_form.1.to_string(),
            format_float(r.omp_form.0),
            r.omp_form.1.to_string(),
            sep_lhs,
            sep_rhs,
            sep_pass,
        ])
        .map_err(|e| write_fail(path, e))?;
    }
    w.flush().map_err(|e| write_fail(path, e))
}
