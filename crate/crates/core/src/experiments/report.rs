//! Convergence reports, rate fitting and CSV/JSON output.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["h", "value", "reference", "abs_error", "rel_error"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub h: u32,
    pub value: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

impl ReportRow {
    /// Errors of `value` against `reference`; the relative error falls back to
    /// the absolute one when the reference vanishes.
    pub fn compare(h: u32, value: f64, reference: f64) -> Self {
        let abs_error = (value - reference).abs();
        ReportRow::with_error(h, value, reference, abs_error)
    }

    /// A row whose absolute error is measured separately, e.g. a norm distance.
    pub fn with_error(h: u32, value: f64, reference: f64, abs_error: f64) -> Self {
        let rel_error = if reference != 0.0 {
            abs_error / reference.abs()
        } else {
            abs_error
        };
        ReportRow {
            h,
            value,
            reference,
            abs_error,
            rel_error,
        }
    }
}

/// Abscissa used by [`fit_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateAxis {
    #[default]
    H,
    /// The `sigma` series of the report.
    Sigma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub name: String,
    /// The statement the experiment checks.
    pub theorem: String,
    pub version: String,
    pub wall_time_seconds: f64,
    pub rate_axis: RateAxis,
    /// Per-row auxiliary columns, aligned with `rows`.
    pub series: BTreeMap<String, Vec<f64>>,
    /// Scalars that do not depend on `h`.
    pub scalars: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub config: Option<ExperimentConfig>,
}

impl Metadata {
    pub fn new(experiment: &str, name: &str, theorem: &str) -> Self {
        Metadata {
            experiment: experiment.to_string(),
            name: name.to_string(),
            theorem: theorem.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: 0.0,
            rate_axis: RateAxis::H,
            series: BTreeMap::new(),
            scalars: BTreeMap::new(),
            notes: Vec::new(),
            config: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    pub fitted_rate: Option<f64>,
    pub metadata: Metadata,
}

impl ConvergenceReport {
    pub fn new(metadata: Metadata) -> Self {
        ConvergenceReport {
            rows: Vec::new(),
            fitted_rate: None,
            metadata,
        }
    }

    pub fn series(&self, key: &str) -> Option<&[f64]> {
        self.metadata.series.get(key).map(Vec::as_slice)
    }

    pub fn push_series(&mut self, key: &str, value: f64) {
        self.metadata.series.entry(key.to_string()).or_default().push(value);
    }

    pub fn row(&self, h: u32) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.h == h)
    }

    /// Sorts rows by `h`, permuting the series with them.
    pub fn sort(&mut self) {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by_key(|&i| self.rows[i].h);
        self.rows = order.iter().map(|&i| self.rows[i]).collect();
        for col in self.metadata.series.values_mut() {
            if col.len() == order.len() {
                *col = order.iter().map(|&i| col[i]).collect();
            }
        }
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Data(format!(
            "a rate fit needs at least 3 positive points, got {}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("a rate fit needs at least two distinct abscissae".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Slope of `log abs_error` against `log h` or `log σ`, per the report's rate axis.
pub fn fit_rate(report: &ConvergenceReport) -> Result<f64> {
    let ys: Vec<f64> = report.rows.iter().map(|r| r.abs_error).collect();
    let xs: Vec<f64> = match report.metadata.rate_axis {
        RateAxis::H => report.rows.iter().map(|r| r.h as f64).collect(),
        RateAxis::Sigma => report
            .series("sigma")
            .ok_or_else(|| Error::Data("report has no sigma series".into()))?
            .to_vec(),
    };
    fit_loglog(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::config(format!("unknown format `{other}`; expected csv or json"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(format!("csv: {e}"))
}

pub fn write_csv<W: Write>(report: &ConvergenceReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            r.h.to_string(),
            format_float(r.value),
            format_float(r.reference),
            format_float(r.abs_error),
            format_float(r.rel_error),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Data(format!("csv: {e}")))?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let head = rd.headers().map_err(csv_err)?;
    if head.iter().ne(CSV_HEADER) {
        return Err(Error::Data(format!("unexpected report header {head:?}")));
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Data(format!("bad number `{s}`"))) };
    rd.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            Ok(ReportRow {
                h: rec[0].parse().map_err(|_| Error::Data(format!("bad h `{}`", &rec[0])))?,
                value: num(&rec[1])?,
                reference: num(&rec[2])?,
                abs_error: num(&rec[3])?,
                rel_error: num(&rec[4])?,
            })
        })
        .collect()
}

pub fn to_json(report: &ConvergenceReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Data(format!("json: {e}")))
}

/// Writes `<dir>/<experiment>_<name>.<ext>` and returns its path.
pub fn emit(report: &ConvergenceReport, format: Format, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!(
        "{}_{}.{}",
        report.metadata.experiment,
        report.metadata.name,
        format.extension()
    ));
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut out = std::io::BufWriter::new(file);
    match format {
        Format::Csv => write_csv(report, &mut out)?,
        Format::Json => {
            out.write_all(to_json(report)?.as_bytes())
                .and_then(|_| out.write_all(b"\n"))
                .map_err(|e| Error::io(&path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
