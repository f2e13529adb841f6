use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{run_metrics, RunMetrics};
use super::SimError;
use crate::metric::Router;
use crate::pd::{request_nodes, worker_nodes, Instance, Metric, Route, Violation};

/// A fixed subtour: request ids in visiting order, each listed twice; the
/// first occurrence is the pickup and the second the delivery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSubtour {
    pub worker: u64,
    pub stops: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub metrics: RunMetrics,
    pub routes: Vec<Route>,
    /// Violations per worker; reported, not enforced.
    pub violations: BTreeMap<u64, Vec<Violation>>,
}

pub fn baseline_from_json(text: &str) -> Result<Vec<BaselineSubtour>, SimError> {
    serde_json::from_str(text).map_err(|e| SimError::Parse(format!("baseline: {e}")))
}

/// Realizes hand-made subtours with distance-optimal legs. Workers without a
/// subtour get an empty route.
pub fn evaluate_baseline(
    router: &Router,
    instance: &Instance,
    subtours: &[BaselineSubtour],
) -> Result<BaselineResult, SimError> {
    let g = router.graph();
    let bad = |m: String| SimError::Baseline(m);
    let mut by_worker: BTreeMap<u64, &BaselineSubtour> = BTreeMap::new();
    for s in subtours {
        if by_worker.insert(s.worker, s).is_some() {
            return Err(bad(format!("worker {} has two subtours", s.worker)));
        }
    }
    if let Some(w) = by_worker
        .keys()
        .find(|&&w| !instance.workers.iter().any(|x| x.id == w))
    {
        return Err(bad(format!("unknown worker {w}")));
    }
    let mut seen: BTreeMap<u64, u64> = BTreeMap::new();
    let mut routes = Vec::new();
    let mut violations = BTreeMap::new();
    for w in &instance.workers {
        let (s, e) = worker_nodes(g, w)?;
        let mut nodes = vec![s];
        if let Some(sub) = by_worker.get(&w.id) {
            let mut open: Vec<u64> = Vec::new();
            for &id in &sub.stops {
                let r = instance
                    .requests
                    .iter()
                    .find(|r| r.id == id)
                    .ok_or_else(|| bad(format!("worker {}: unknown request {id}", w.id)))?;
                let (p, d) = request_nodes(g, r)?;
                if let Some(k) = open.iter().position(|&x| x == id) {
                    open.remove(k);
                    nodes.push(d);
                } else {
                    if seen.insert(id, w.id).is_some() {
                        return Err(bad(format!(
                            "request {id} is listed more than twice or by two workers"
                        )));
                    }
                    open.push(id);
                    nodes.push(p);
                }
            }
            if let Some(id) = open.first() {
                return Err(bad(format!(
                    "worker {}: request {id} is never delivered",
                    w.id
                )));
            }
        }
        nodes.push(e);
        let route = Route::with_metric(
            w.id,
            w.vehicle_index(g)?,
            w.capacity,
            nodes,
            Metric::Distance,
            router,
        )?;
        let v = route.check_feasible();
        if !v.is_empty() {
            log::warn!(
                "baseline route of worker {} has {} violations",
                w.id,
                v.len()
            );
            violations.insert(w.id, v);
        }
        routes.push(route);
    }
    Ok(BaselineResult {
        metrics: run_metrics(instance, &routes, &[]),
        routes,
        violations,
    })
}
