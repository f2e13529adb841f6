//! Instance generation, online replay and run reporting.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::metric::{MetricError, RoadGraph};
use crate::pd::{Instance, PdError, RouteError};
use crate::prophet::ProphetError;

mod baseline;
mod generate;
mod metrics;
mod replay;
mod report;


pub use baseline::{baseline_from_json, evaluate_baseline, BaselineResult, BaselineSubtour};
pub use generate::{
    generate, generate_graph, generate_json, generate_requests, generate_workers, GenSpec,
};
pub use metrics::{mean_and_variance, metrics_csv, metrics_row, run_metrics, RunMetrics};
pub use replay::{
    release_order, replay, Event, RouteRecord, RouteStop, RunConfig, RunResult, Variant,
};
pub use report::{delta_percent, fingerprint, report, Report, RunSummary};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Pd(#[from] PdError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Prophet(#[from] ProphetError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("baseline: {0}")]
    Baseline(String),
    #[error("report: {0}")]
    Report(String),
}

pub fn read_text(path: &Path) -> Result<String, SimError> {
    fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), SimError> {
    fs::write(path, text).map_err(|source| SimError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parsed graph and instance plus the fingerprint of both documents.
pub struct Loaded {
    pub graph: RoadGraph<f64>,
    pub instance: Instance,
    pub fingerprint: String,
}

pub fn load(graph_path: &Path, instance_path: &Path) -> Result<Loaded, SimError> {
    let graph_text = read_text(graph_path)?;
    let instance_text = read_text(instance_path)?;
    let graph = RoadGraph::from_json(&graph_text)?;
    let instance = Instance::from_json(&instance_text)?;
    instance.check_against(&graph)?;
    Ok(Loaded {
        graph,
        instance,
        fingerprint: fingerprint(&graph_text, &instance_text),
    })
}

/// Writes `metrics.csv`, `events.jsonl`, `routes.json`, `timing.csv` and
/// `summary.json` into `dir`, creating it if needed.
pub fn write_outputs(
    dir: &Path,
    result: &RunResult,
    fingerprint: &str,
) -> Result<RunSummary, SimError> {
    fs::create_dir_all(dir).map_err(|source| SimError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let summary = RunSummary {
        variant: result.label.clone(),
        instance: fingerprint.to_string(),
        metrics: result.metrics.clone(),
    };
    write_text(
        &dir.join("metrics.csv"),
        &metrics_csv(&result.label, &result.metrics),
    )?;
    write_text(&dir.join("events.jsonl"), &result.events_jsonl())?;
    write_text(&dir.join("routes.json"), &result.routes_json())?;
    write_text(&dir.join("timing.csv"), &result.timing_csv())?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_text(&dir.join("summary.json"), &json)?;
    Ok(summary)
}

pub fn read_summary(dir: &Path) -> Result<RunSummary, SimError> {
    let path = dir.join("summary.json");
    serde_json::from_str(&read_text(&path)?)
        .map_err(|e| SimError::Parse(format!("{}: {e}", path.display())))
}
