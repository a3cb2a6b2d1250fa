//! CSV and SVG output.
//!
//! Floats are written in Rust's shortest round-trip decimal form, so a
//! re-parsed file reproduces the in-memory values exactly and identical runs
//! give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::ComparisonSummary;
use crate::error::{Error, Result};
use crate::integrator::TrajectoryRecord;

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn pop_label(i: usize, dim: usize) -> String {
    if dim < 10 {
        format!("rho_{i}{i}")
    } else {
        format!("rho_{i}_{i}")
    }
}

pub fn record_header(dim: usize) -> Vec<String> {
    let mut h = vec!["t_us".to_string()];
    h.extend((1..=dim).map(|i| pop_label(i, dim)));
    h.extend(
        [
            "abs_rho_13",
            "abs_rho_14",
            "abs_rho_34",
            "purity",
            "trace_dev",
            "herm_dev",
            "min_eig",
        ]
        .map(String::from),
    );
    h
}

fn record_rows(record: &TrajectoryRecord) -> impl Iterator<Item = Vec<f64>> + '_ {
    record
        .samples
        .iter()
        .zip(&record.populations)
        .map(|(s, pops)| {
            let mut row = Vec::with_capacity(pops.len() + 8);
            row.push(s.t);
            row.extend_from_slice(pops);
            row.extend_from_slice(&s.coherences);
            row.extend([s.purity, s.trace_dev, s.herm_dev, s.min_eig]);
            row
        })
}

pub fn write_record_csv(record: &TrajectoryRecord, path: &Path) -> Result<()> {
    let err = csv_error(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(record_header(record.dim)).map_err(&err)?;
    for row in record_rows(record) {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary_csv(summary: &ComparisonSummary, path: &Path) -> Result<()> {
    let err = csv_error(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(["t_us", "max_diag_diff", "max_coherence_diff", "purity_diff"])
        .map_err(&err)?;
    for r in &summary.rows {
        w.write_record([r.t, r.diag, r.coherence, r.purity].map(|v| v.to_string()))
            .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A numeric CSV read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let err = csv_error(path);
    let mut r = csv::Reader::from_path(path).map_err(&err)?;
    let header = r
        .headers()
        .map_err(&err)?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(&err)?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| {
                    Error::Config(format!("{}: bad number '{f}': {e}", path.display()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Columns drawn by default in [`emit_plot`].
pub const DEFAULT_PLOT_COLUMNS: &[&str] = &["rho_11", "rho_44", "rho_88", "abs_rho_14", "purity"];

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf",
];

/// Static SVG line chart of the named record columns against time.
pub fn emit_plot(record: &TrajectoryRecord, columns: &[&str], path: &Path) -> Result<()> {
    let header = record_header(record.dim);
    let rows: Vec<Vec<f64>> = record_rows(record).collect();
    let mut series = Vec::new();
    for &name in columns {
        let i = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::arg(format!("no column named '{name}'")))?;
        series.push((name, i));
    }

    let (w, h) = (720.0, 420.0);
    let (left, right, top, bottom) = (60.0, 150.0, 20.0, 45.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let t_max = rows
        .last()
        .map(|r| r[0])
        .unwrap_or(1.0)
        .max(f64::MIN_POSITIVE);
    let (mut y_min, mut y_max) = (0.0f64, 1.0f64);
    for row in &rows {
        for &(_, i) in &series {
            if row[i].is_finite() {
                y_min = y_min.min(row[i]);
                y_max = y_max.max(row[i]);
            }
        }
    }
    let x = |t: f64| left + pw * t / t_max;
    let y = |v: f64| top + ph * (1.0 - (v - y_min) / (y_max - y_min));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let frac = k as f64 / 4.0;
        let tv = t_max * frac;
        let yv = y_min + (y_max - y_min) * frac;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x(tv),
            top + ph + 16.0,
            trim(tv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y(yv) + 4.0,
            trim(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">t [us]</text>"#,
        left + pw / 2.0,
        h - 8.0
    );
    for (n, &(name, i)) in series.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let points: Vec<String> = rows
            .iter()
            .filter(|r| r[i].is_finite())
            .map(|r| format!("{:.2},{:.2}", x(r[0]), y(r[i])))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 14.0 + 18.0 * n as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            left + pw + 10.0,
            left + pw + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{name}</text>"#,
            left + pw + 36.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn trim(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}
