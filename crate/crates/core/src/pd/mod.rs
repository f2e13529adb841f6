//! Requests, workers, the pickup-and-delivery event graph and labeled routes.

pub(crate) mod route;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{snap_to_graph, LegTag, MetricError, RoadGraph, VertexId};

pub use route::{Label, Leg, Route, RouteError, Violation, ViolationKind};

/// Absolute tolerance for time, distance and load comparisons.
pub const TOL: f64 = 1e-6;

/// Scenario defaults applied when optional fields are absent.
pub const DEFAULT_LOAD: f64 = 1.0;
pub const DEFAULT_DELIVERY_WINDOW: f64 = 2400.0;
pub const DEFAULT_SERVICE_TIME: f64 = 90.0;
pub const DEFAULT_CAPACITY: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdError {
    #[error("instance: {0}")]
    Parse(String),
    #[error("request {id}: {message}")]
    BadRequest { id: u64, message: String },
    #[error("worker {id}: {message}")]
    BadWorker { id: u64, message: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Route(#[from] RouteError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Route cost metric: travel time (seconds) or length (meters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Time,
    Distance,
}

impl Metric {
    /// Tag for legs built under this metric.
    pub fn leg_tag(self) -> LegTag {
        match self {
            Metric::Time => LegTag::TimeOptimal,
            Metric::Distance => LegTag::DistanceOptimal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RequestRecord")]
pub struct Request {
    pub id: u64,
    pub pickup_point: Point,
    pub earliest_pickup_time: f64,
    pub pickup_service_time: f64,
    pub delivery_point: Point,
    pub latest_delivery_time: f64,
    pub delivery_service_time: f64,
    pub load: f64,
    /// `None` admits every vehicle type.
    pub eligible_vehicle_types: Option<Vec<String>>,
    pub release_time: f64,
    pub is_virtual: bool,
    pub probability: Option<f64>,
}

impl Request {
    pub fn eligible(&self, vehicle_type: &str) -> bool {
        self.eligible_vehicle_types
            .as_ref()
            .is_none_or(|v| v.iter().any(|t| t == vehicle_type))
    }

    /// Appearance probability; 1 for real requests.
    pub fn appearance(&self) -> f64 {
        self.probability.unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequestRecord {
    id: u64,
    pickup_point: Point,
    earliest_pickup_time: f64,
    #[serde(default)]
    pickup_service_time: Option<f64>,
    delivery_point: Point,
    #[serde(default)]
    latest_delivery_time: Option<f64>,
    #[serde(default)]
    delivery_service_time: Option<f64>,
    #[serde(default)]
    load: Option<f64>,
    #[serde(default)]
    eligible_vehicle_types: Option<Vec<String>>,
    #[serde(default)]
    release_time: Option<f64>,
    #[serde(default)]
    is_virtual: Option<bool>,
    #[serde(default)]
    probability: Option<f64>,
    /// Sample-day tag carried by history files; ignored here.
    #[serde(default)]
    #[allow(dead_code)]
    day: Option<u32>,
}

impl TryFrom<RequestRecord> for Request {
    type Error = PdError;

    fn try_from(r: RequestRecord) -> Result<Self, PdError> {
        let ep = r.earliest_pickup_time;
        let is_virtual = r.is_virtual.unwrap_or(r.probability.is_some());
        let req = Request {
            id: r.id,
            pickup_point: r.pickup_point,
            earliest_pickup_time: ep,
            pickup_service_time: r.pickup_service_time.unwrap_or(DEFAULT_SERVICE_TIME),
            delivery_point: r.delivery_point,
            latest_delivery_time: r
                .latest_delivery_time
                .unwrap_or(ep + DEFAULT_DELIVERY_WINDOW),
            delivery_service_time: r.delivery_service_time.unwrap_or(DEFAULT_SERVICE_TIME),
            load: r.load.unwrap_or(DEFAULT_LOAD),
            eligible_vehicle_types: r.eligible_vehicle_types,
            release_time: r.release_time.unwrap_or(ep),
            is_virtual,
            probability: r.probability,
        };
        req.validate()?;
        Ok(req)
    }
}

impl Request {
    pub fn validate(&self) -> Result<(), PdError> {
        let bad = |message: &str| {
            Err(PdError::BadRequest {
                id: self.id,
                message: message.to_string(),
            })
        };
        let finite = [
            self.earliest_pickup_time,
            self.pickup_service_time,
            self.delivery_service_time,
            self.load,
            self.release_time,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("non-finite numeric field");
        }
        if self.latest_delivery_time.is_nan()
            || self.earliest_pickup_time >= self.latest_delivery_time
        {
            return bad("earliest_pickup_time must precede latest_delivery_time");
        }
        if self.load < 0.0 {
            return bad("load must be non-negative");
        }
        if self.pickup_service_time < 0.0 || self.delivery_service_time < 0.0 {
            return bad("service times must be non-negative");
        }
        if !self.is_virtual && self.release_time > self.earliest_pickup_time {
            return bad("release_time exceeds earliest_pickup_time");
        }
        match (self.is_virtual, self.probability) {
            (true, Some(p)) if (0.0..=1.0).contains(&p) => Ok(()),
            (true, Some(_)) => bad("probability must lie in [0, 1]"),
            (true, None) => bad("virtual request lacks probability"),
            (false, Some(_)) => bad("probability given for a real request"),
            (false, None) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WorkerRecord")]
pub struct Worker {
    pub id: u64,
    pub start_point: Point,
    pub start_time: f64,
    pub end_point: Point,
    pub end_time: f64,
    pub capacity: f64,
    /// `None` means the graph's first vehicle type.
    pub vehicle_type: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkerRecord {
    id: u64,
    start_point: Point,
    start_time: f64,
    end_point: Point,
    end_time: f64,
    #[serde(default)]
    capacity: Option<f64>,
    #[serde(default)]
    vehicle_type: Option<String>,
}

impl TryFrom<WorkerRecord> for Worker {
    type Error = PdError;

    fn try_from(w: WorkerRecord) -> Result<Self, PdError> {
        let worker = Worker {
            id: w.id,
            start_point: w.start_point,
            start_time: w.start_time,
            end_point: w.end_point,
            end_time: w.end_time,
            capacity: w.capacity.unwrap_or(DEFAULT_CAPACITY),
            vehicle_type: w.vehicle_type,
        };
        worker.validate()?;
        Ok(worker)
    }
}

impl Worker {
    pub fn validate(&self) -> Result<(), PdError> {
        let bad = |message: &str| {
            Err(PdError::BadWorker {
                id: self.id,
                message: message.to_string(),
            })
        };
        if !(self.start_time < self.end_time) {
            return bad("start_time must precede end_time");
        }
        if !(self.capacity > 0.0) {
            return bad("capacity must be positive");
        }
        Ok(())
    }

    /// Vehicle-type index in `g`.
    pub fn vehicle_index(&self, g: &RoadGraph<f64>) -> Result<usize, MetricError> {
        match &self.vehicle_type {
            Some(name) => g.vehicle_index(name),
            None if !g.vehicle_types().is_empty() => Ok(0),
            None => Err(MetricError::UnknownVehicleType("<none>".into())),
        }
    }

    pub fn vehicle_name<'g>(&self, g: &'g RoadGraph<f64>) -> Result<&'g str, MetricError> {
        Ok(g.vehicle_types()[self.vehicle_index(g)?].as_str())
    }

    /// Operational at time `t`: `ws <= t < we`.
    pub fn operational(&self, t: f64) -> bool {
        self.start_time <= t && t < self.end_time
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(default)]
    pub requests: Vec<Request>,
    #[serde(default)]
    pub workers: Vec<Worker>,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self, PdError> {
        let inst: Instance =
            serde_json::from_str(text).map_err(|e| PdError::Parse(e.to_string()))?;
        inst.check_ids()?;
        Ok(inst)
    }

    pub fn check_ids(&self) -> Result<(), PdError> {
        let mut seen = HashSet::new();
        for r in &self.requests {
            if !seen.insert(r.id) {
                return Err(PdError::BadRequest {
                    id: r.id,
                    message: "duplicate id".into(),
                });
            }
        }
        seen.clear();
        for w in &self.workers {
            if !seen.insert(w.id) {
                return Err(PdError::BadWorker {
                    id: w.id,
                    message: "duplicate id".into(),
                });
            }
        }
        Ok(())
    }

    /// Checks vehicle types against `g`.
    pub fn check_against(&self, g: &RoadGraph<f64>) -> Result<(), PdError> {
        for w in &self.workers {
            w.vehicle_index(g)?;
        }
        Ok(())
    }
}

/// Parses a forecast file: a JSON list of virtual requests.
pub fn forecasts_from_json(text: &str) -> Result<Vec<Request>, PdError> {
    let list: Vec<Request> =
        serde_json::from_str(text).map_err(|e| PdError::Parse(e.to_string()))?;
    if let Some(r) = list.iter().find(|r| !r.is_virtual) {
        return Err(PdError::BadRequest {
            id: r.id,
            message: "forecast entries must be virtual".into(),
        });
    }
    Ok(list)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    ShiftStart,
    Pickup,
    Delivery,
    ShiftEnd,
}

/// A service event with the constraint data the labels need.
///
/// `owner` is a request id for pickups and deliveries, a worker id otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdNode {
    pub kind: NodeKind,
    pub owner: u64,
    pub is_virtual: bool,
    pub vertex: VertexId,
    /// Earliest service start (pickups) or shift start (shift nodes).
    pub ready: f64,
    pub service: f64,
    /// Latest arrival; infinite when unconstrained.
    pub deadline: f64,
    /// Load magnitude; added at pickups and removed at deliveries.
    pub load: f64,
    pub probability: f64,
    /// Departure is never earlier than this.
    pub hold: f64,
}

impl PdNode {
    pub fn load_delta(&self) -> f64 {
        match self.kind {
            NodeKind::Pickup => self.load,
            NodeKind::Delivery => -self.load,
            _ => 0.0,
        }
    }

    pub fn is_request(&self) -> bool {
        matches!(self.kind, NodeKind::Pickup | NodeKind::Delivery)
    }

    pub fn shift_start(w: &Worker, vertex: VertexId) -> Self {
        PdNode {
            kind: NodeKind::ShiftStart,
            owner: w.id,
            is_virtual: false,
            vertex,
            ready: w.start_time,
            service: 0.0,
            deadline: f64::INFINITY,
            load: 0.0,
            probability: 1.0,
            hold: f64::NEG_INFINITY,
        }
    }

    pub fn shift_end(w: &Worker, vertex: VertexId) -> Self {
        PdNode {
            kind: NodeKind::ShiftEnd,
            deadline: w.end_time,
            ..Self::shift_start(w, vertex)
        }
    }

    pub fn pickup(r: &Request, vertex: VertexId) -> Self {
        PdNode {
            kind: NodeKind::Pickup,
            owner: r.id,
            is_virtual: r.is_virtual,
            vertex,
            ready: r.earliest_pickup_time,
            service: r.pickup_service_time,
            deadline: f64::INFINITY,
            load: r.load,
            probability: r.appearance(),
            hold: f64::NEG_INFINITY,
        }
    }

    pub fn delivery(r: &Request, vertex: VertexId) -> Self {
        PdNode {
            kind: NodeKind::Delivery,
            ready: f64::NEG_INFINITY,
            service: r.delivery_service_time,
            deadline: r.latest_delivery_time,
            ..Self::pickup(r, vertex)
        }
    }
}

/// Snapped vertices for a request's pickup and delivery points.
pub fn request_nodes(g: &RoadGraph<f64>, r: &Request) -> Result<(PdNode, PdNode), MetricError> {
    let p = snap_to_graph(g, r.pickup_point.x, r.pickup_point.y)?;
    let d = snap_to_graph(g, r.delivery_point.x, r.delivery_point.y)?;
    Ok((PdNode::pickup(r, p), PdNode::delivery(r, d)))
}

/// Snapped shift nodes for a worker.
pub fn worker_nodes(g: &RoadGraph<f64>, w: &Worker) -> Result<(PdNode, PdNode), MetricError> {
    let s = snap_to_graph(g, w.start_point.x, w.start_point.y)?;
    let e = snap_to_graph(g, w.end_point.x, w.end_point.y)?;
    Ok((PdNode::shift_start(w, s), PdNode::shift_end(w, e)))
}

/// Identity of a node in the event graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeRef {
    pub kind: NodeKind,
    pub owner: u64,
}

/// Event graph over shift starts, pickups, deliveries and shift ends.
///
/// Node order is starts, pickups, deliveries, ends, each in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct PdGraph {
    pub nodes: Vec<NodeRef>,
    pub arcs: Vec<(usize, usize)>,
    pub num_workers: usize,
    pub num_requests: usize,
}

impl PdGraph {
    pub fn start(&self, w: usize) -> usize {
        w
    }
    pub fn pickup(&self, r: usize) -> usize {
        self.num_workers + r
    }
    pub fn delivery(&self, r: usize) -> usize {
        self.num_workers + self.num_requests + r
    }
    pub fn end(&self, w: usize) -> usize {
        self.num_workers + 2 * self.num_requests + w
    }

    pub fn arc_index(&self, u: usize, v: usize) -> Option<usize> {
        self.arcs.iter().position(|&a| a == (u, v))
    }
}

pub fn build_pd_graph(requests: &[Request], workers: &[Worker]) -> PdGraph {
    let (nw, nr) = (workers.len(), requests.len());
    let mut nodes = Vec::with_capacity(2 * (nw + nr));
    let node = |kind, owner| NodeRef { kind, owner };
    nodes.extend(workers.iter().map(|w| node(NodeKind::ShiftStart, w.id)));
    nodes.extend(requests.iter().map(|r| node(NodeKind::Pickup, r.id)));
    nodes.extend(requests.iter().map(|r| node(NodeKind::Delivery, r.id)));
    nodes.extend(workers.iter().map(|w| node(NodeKind::ShiftEnd, w.id)));
    let mut g = PdGraph {
        nodes,
        arcs: Vec::new(),
        num_workers: nw,
        num_requests: nr,
    };
    for w in 0..nw {
        for r in 0..nr {
            g.arcs.push((g.start(w), g.pickup(r)));
        }
    }
    let inner: Vec<usize> = (0..nr)
        .map(|r| g.pickup(r))
        .chain((0..nr).map(|r| g.delivery(r)))
        .collect();
    for &u in &inner {
        for &v in &inner {
            let own_back = u >= g.delivery(0) && v == u - nr;
            if u != v && !own_back {
                g.arcs.push((u, v));
            }
        }
    }
    for r in 0..nr {
        for w in 0..nw {
            g.arcs.push((g.delivery(r), g.end(w)));
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(id: u64) -> Request {
        serde_json::from_str(&format!(
            r#"{{"id": {id}, "pickup_point": {{"x": 0, "y": 0}}, "earliest_pickup_time": 100,
                "delivery_point": {{"x": 1, "y": 1}}}}"#
        ))
        .unwrap()
    }

    fn worker(id: u64) -> Worker {
        serde_json::from_str(&format!(
            r#"{{"id": {id}, "start_point": {{"x": 0, "y": 0}}, "start_time": 0,
                "end_point": {{"x": 0, "y": 0}}, "end_time": 1000}}"#
        ))
        .unwrap()
    }

    #[test]
    fn scenario_defaults() {
        let r = req(1);
        assert_eq!(r.load, 1.0);
        assert_eq!(r.latest_delivery_time, 2500.0);
        assert_eq!(r.pickup_service_time, 90.0);
        assert_eq!(r.delivery_service_time, 90.0);
        assert_eq!(r.release_time, 100.0);
        assert!(!r.is_virtual);
        assert_eq!(worker(1).capacity, 3.0);
    }

    #[test]
    fn validation_errors_name_the_record() {
        let text = r#"{"requests": [{"id": 4, "pickup_point": {"x": 0, "y": 0},
            "earliest_pickup_time": 100, "latest_delivery_time": 50,
            "delivery_point": {"x": 0, "y": 0}}]}"#;
        let err = Instance::from_json(text).unwrap_err().to_string();
        assert!(err.contains("request 4"), "{err}");
        let text = r#"{"workers": [{"id": 2, "start_point": {"x": 0, "y": 0}, "start_time": 5,
            "end_point": {"x": 0, "y": 0}}]}"#;
        let err = Instance::from_json(text).unwrap_err().to_string();
        assert!(err.contains("end_time") && err.contains("line"), "{err}");
    }

    #[test]
    fn virtual_inferred_from_probability() {
        let list = forecasts_from_json(
            r#"[{"id": 9, "pickup_point": {"x": 0, "y": 0}, "earliest_pickup_time": 10,
                "delivery_point": {"x": 0, "y": 0}, "probability": 0.5}]"#,
        )
        .unwrap();
        assert!(list[0].is_virtual);
        assert_eq!(list[0].appearance(), 0.5);
    }

    fn brute_arcs(nr: usize, nw: usize) -> usize {
        // enumerate every ordered node pair and keep those the rule admits
        let g = build_pd_graph(
            &(0..nr as u64).map(req).collect::<Vec<_>>(),
            &(0..nw as u64).map(worker).collect::<Vec<_>>(),
        );
        let n = g.nodes.len();
        let mut count = 0;
        for u in 0..n {
            for v in 0..n {
                let (a, b) = (g.nodes[u], g.nodes[v]);
                use NodeKind::*;
                let ok = match (a.kind, b.kind) {
                    (ShiftStart, Pickup) | (Delivery, ShiftEnd) => true,
                    (Pickup | Delivery, Pickup | Delivery) => {
                        u != v && !(a.kind == Delivery && b.kind == Pickup && a.owner == b.owner)
                    }
                    _ => false,
                };
                count += ok as usize;
            }
        }
        count
    }

    #[test]
    fn pd_graph_arc_counts() {
        let g = build_pd_graph(&[req(1)], &[worker(1)]);
        assert_eq!(g.arcs, vec![(0, 1), (1, 2), (2, 3)]);
        assert!(g.arc_index(2, 1).is_none());
        let g = build_pd_graph(&[req(1), req(2)], &[worker(1)]);
        assert_eq!(g.arcs.len(), 14);
        assert_eq!(brute_arcs(2, 1), 14);
        assert_eq!(build_pd_graph(&[], &[worker(1)]).arcs.len(), 0);
        for (nr, nw) in [(3, 2), (4, 3)] {
            let rs: Vec<_> = (0..nr).map(req).collect();
            let ws: Vec<_> = (0..nw).map(worker).collect();
            assert_eq!(
                build_pd_graph(&rs, &ws).arcs.len(),
                brute_arcs(nr as usize, nw as usize)
            );
        }
    }
}
