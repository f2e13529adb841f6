use serde::{Deserialize, Serialize};

use crate::pd::{Instance, NodeKind, Route};

/// Per-run summary. Lengths in km, times in hours, latencies in ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub requests: usize,
    pub workers: usize,
    pub served: usize,
    pub rejected: usize,
    pub total_travel_time_h: f64,
    pub total_length_km: f64,
    pub path_len_avg_km: f64,
    /// Population variance of per-worker route lengths.
    pub path_len_var_km2: f64,
    pub latency_mean_ms: f64,
    pub latency_max_ms: f64,
    /// Route length per worker in worker order, km.
    pub workloads_km: Vec<f64>,
}

pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Metrics over final routes. Served counts real requests present in some
/// route; the workload statistics range over every worker in the instance.
pub fn run_metrics(instance: &Instance, routes: &[Route], latencies_ms: &[f64]) -> RunMetrics {
    let requests = instance.requests.iter().filter(|r| !r.is_virtual).count();
    let served = routes
        .iter()
        .flat_map(|r| r.nodes())
        .filter(|n| n.kind == NodeKind::Pickup && !n.is_virtual)
        .count();
    let workloads_km: Vec<f64> = routes.iter().map(|r| r.length() / 1000.0).collect();
    let (path_len_avg_km, path_len_var_km2) = mean_and_variance(&workloads_km);
    let (latency_mean_ms, _) = mean_and_variance(latencies_ms);
    RunMetrics {
        requests,
        workers: instance.workers.len(),
        served,
        rejected: requests - served,
        total_travel_time_h: routes.iter().map(Route::travel_time).sum::<f64>() / 3600.0,
        total_length_km: workloads_km.iter().sum(),
        path_len_avg_km,
        path_len_var_km2,
        latency_mean_ms,
        latency_max_ms: latencies_ms.iter().copied().fold(0.0, f64::max),
        workloads_km,
    }
}

/// Column names and values written to `metrics.csv`; latency is left out so
/// the file is identical across runs.
pub fn metrics_row(label: &str, m: &RunMetrics) -> (Vec<&'static str>, Vec<String>) {
    let header = vec![
        "variant",
        "requests",
        "workers",
        "served",
        "rejected",
        "total_travel_time_h",
        "total_length_km",
        "path_len_avg_km",
        "path_len_var_km2",
    ];
    let row = vec![
        label.to_string(),
        m.requests.to_string(),
        m.workers.to_string(),
        m.served.to_string(),
        m.rejected.to_string(),
        format!("{:.6}", m.total_travel_time_h),
        format!("{:.6}", m.total_length_km),
        format!("{:.6}", m.path_len_avg_km),
        format!("{:.6}", m.path_len_var_km2),
    ];
    (header, row)
}

pub fn metrics_csv(label: &str, m: &RunMetrics) -> String {
    let (header, row) = metrics_row(label, m);
    format!("{}\n{}\n", header.join(","), row.join(","))
}
