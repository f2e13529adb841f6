use std::fmt::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{metrics_row, RunMetrics};
use super::SimError;

/// Metrics of one run, tagged with the instance they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub variant: String,
    /// SHA-256 over the graph and instance documents.
    pub instance: String,
    pub metrics: RunMetrics,
}

pub fn fingerprint(graph_json: &str, instance_json: &str) -> String {
    let mut h = Sha256::new();
    h.update(graph_json.as_bytes());
    h.update([0u8]);
    h.update(instance_json.as_bytes());
    hex::encode(h.finalize())
}

/// Percentage decrease relative to `base`; `None` when `base` is zero and `x` is not.
pub fn delta_percent(base: f64, x: f64) -> Option<f64> {
    if base == 0.0 {
        (x == 0.0).then_some(0.0)
    } else {
        Some((base - x) / base * 100.0)
    }
}

const DELTA_COLUMNS: [&str; 4] = [
    "total_travel_time_h",
    "total_length_km",
    "path_len_avg_km",
    "path_len_var_km2",
];

fn delta_inputs(m: &RunMetrics) -> [f64; 4] {
    [
        m.total_travel_time_h,
        m.total_length_km,
        m.path_len_avg_km,
        m.path_len_var_km2,
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// One row per run; with two or more runs, adds percentage decreases against
/// run `baseline`. Runs over different instances are refused.
pub fn report(runs: &[RunSummary], baseline: usize) -> Result<Report, SimError> {
    let Some(first) = runs.first() else {
        return Err(SimError::Report("no runs to compare".into()));
    };
    if let Some(other) = runs.iter().find(|r| r.instance != first.instance) {
        return Err(SimError::Report(format!(
            "runs `{}` and `{}` come from different instances",
            first.variant, other.variant
        )));
    }
    let base = runs
        .get(baseline)
        .ok_or_else(|| SimError::Report(format!("baseline index {baseline} out of range")))?;
    let with_deltas = runs.len() > 1;
    let (cols, _) = metrics_row("", &first.metrics);
    let mut header: Vec<String> = cols.into_iter().map(String::from).collect();
    if with_deltas {
        header.extend(DELTA_COLUMNS.iter().map(|c| format!("{c}_delta_pct")));
    }
    let rows = runs
        .iter()
        .map(|r| {
            let (_, mut row) = metrics_row(&r.variant, &r.metrics);
            if with_deltas {
                let b = delta_inputs(&base.metrics);
                for (k, x) in delta_inputs(&r.metrics).into_iter().enumerate() {
                    row.push(delta_percent(b[k], x).map_or("n/a".into(), |d| format!("{d:.2}")));
                }
            }
            row
        })
        .collect();
    Ok(Report { header, rows })
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Fixed-width table for terminals.
    pub fn to_table(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].len())
                    .chain([self.header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            for (c, cell) in cells.iter().enumerate() {
                if c == 0 {
                    let _ = write!(out, "{cell:<w$}", w = widths[c]);
                } else {
                    let _ = write!(out, "  {cell:>w$}", w = widths[c]);
                }
            }
            out.push('\n');
        };
        line(&mut out, &self.header);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        line(&mut out, &rule);
        for row in &self.rows {
            line(&mut out, row);
        }
        out
    }
}
