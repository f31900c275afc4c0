//! Result rows and their CSV / JSON forms.
//!
//! Every float is rounded to 9 significant digits when a row is built, so
//! writing and re-reading a table reproduces it exactly.

use std::cmp::Ordering;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::MetricEstimate;

pub const CSV_HEADER: [&str; 9] = [
    "scheme",
    "metric",
    "sweep_param",
    "sweep_value",
    "source",
    "value",
    "stderr",
    "trials",
    "seed",
];

/// Rounds to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub metric: String,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub source: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

impl ResultRow {
    /// A row without sampling metadata.
    pub fn exact(scheme: &str, metric: &str, sweep_param: &str, sweep_value: f64, source: &str, value: f64) -> Self {
        ResultRow {
            scheme: scheme.to_string(),
            metric: metric.to_string(),
            sweep_param: sweep_param.to_string(),
            sweep_value: round_sig9(sweep_value),
            source: source.to_string(),
            value: round_sig9(value),
            stderr: None,
            trials: None,
            seed: None,
        }
    }

    /// A Monte Carlo row.
    pub fn sampled(
        scheme: &str,
        metric: &str,
        sweep_param: &str,
        sweep_value: f64,
        est: &MetricEstimate,
        seed: u64,
    ) -> Self {
        ResultRow {
            stderr: Some(round_sig9(est.stderr)),
            trials: Some(est.trials),
            seed: Some(seed),
            ..ResultRow::exact(scheme, metric, sweep_param, sweep_value, "monte_carlo", est.value)
        }
    }

    fn sort_key_cmp(&self, other: &ResultRow) -> Ordering {
        self.metric
            .cmp(&other.metric)
            .then_with(|| self.scheme.cmp(&other.scheme))
            .then_with(|| self.sweep_value.total_cmp(&other.sweep_value))
            .then_with(|| self.source.cmp(&other.source))
    }

    fn record(&self) -> [String; 9] {
        [
            self.scheme.clone(),
            self.metric.clone(),
            self.sweep_param.clone(),
            fmt_float(self.sweep_value),
            self.source.clone(),
            fmt_float(self.value),
            self.stderr.map(fmt_float).unwrap_or_default(),
            self.trials.map(|t| t.to_string()).unwrap_or_default(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        ]
    }
}

/// Rows of one experiment, kept in canonical order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(mut rows: Vec<ResultRow>) -> Self {
        rows.sort_by(ResultRow::sort_key_cmp);
        ResultTable { rows }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Rows matching scheme, metric and source.
    pub fn select<'a>(
        &'a self,
        scheme: &'a str,
        metric: &'a str,
        source: &'a str,
    ) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.scheme == scheme && r.metric == metric && r.source == source)
    }

    /// The single value at one sweep point, if present.
    pub fn value_at(&self, scheme: &str, metric: &str, source: &str, sweep_value: f64) -> Option<f64> {
        self.select(scheme, metric, source)
            .find(|r| r.sweep_value == round_sig9(sweep_value))
            .map(|r| r.value)
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.record()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.rows).expect("rows serialize");
        s.push('\n');
        s
    }

    pub fn parse_csv(text: &str) -> Result<ResultTable> {
        let bad = |line: u64, reason: String| Error::config(format!("csv line {line}"), reason);
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| bad(1, e.to_string()))?;
        if header.iter().ne(CSV_HEADER) {
            return Err(bad(1, format!("unexpected header {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| bad(0, e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            let float = |i: usize| -> Result<f64> {
                rec[i].parse().map_err(|_| bad(line, format!("`{}` is not a number", &rec[i])))
            };
            let opt_int = |i: usize| -> Result<Option<u64>> {
                if rec[i].is_empty() {
                    Ok(None)
                } else {
                    rec[i].parse().map(Some).map_err(|_| bad(line, format!("`{}` is not an integer", &rec[i])))
                }
            };
            rows.push(ResultRow {
                scheme: rec[0].to_string(),
                metric: rec[1].to_string(),
                sweep_param: rec[2].to_string(),
                sweep_value: float(3)?,
                source: rec[4].to_string(),
                value: float(5)?,
                stderr: if rec[6].is_empty() { None } else { Some(float(6)?) },
                trials: opt_int(7)?,
                seed: opt_int(8)?,
            });
        }
        Ok(ResultTable { rows })
    }

    pub fn parse_json(text: &str) -> Result<ResultTable> {
        let rows: Vec<ResultRow> =
            serde_json::from_str(text).map_err(|e| Error::config("json", e.to_string()))?;
        Ok(ResultTable { rows })
    }
}

/// Writes the table as CSV to `path`.
pub fn write_csv(table: &ResultTable, path: &Path) -> Result<()> {
    write_text(path, &table.to_csv_string())
}

pub fn write_json(table: &ResultTable, path: &Path) -> Result<()> {
    write_text(path, &table.to_json_string())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
