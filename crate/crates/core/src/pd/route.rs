use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use super::{Metric, NodeKind, PdNode, TOL};
use crate::metric::{ArcId, LegTag, Router, VertexId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("no road path from vertex {from} to vertex {to}")]
    Disconnected { from: VertexId, to: VertexId },
    #[error("malformed subtour: {0}")]
    Malformed(String),
    #[error("index {index} out of range for route of {len} nodes")]
    OutOfRange { index: usize, len: usize },
}

/// Per-node labels: arrival, earliest departure, waiting and load after service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Label {
    pub arrive: f64,
    pub depart: f64,
    pub wait: f64,
    pub load: f64,
}

/// Realized road path between consecutive nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    pub tag: LegTag,
    pub depart: f64,
    pub arrive: f64,
    pub length: f64,
    /// Travel time above the free-flow lower bound between the endpoints.
    pub gap: f64,
    pub arcs: Arc<[ArcId]>,
}

impl Leg {
    pub fn travel_time(&self) -> f64 {
        self.arrive - self.depart
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ViolationKind {
    Deadline { arrive: f64, deadline: f64 },
    ShiftEnd { arrive: f64, end: f64 },
    Capacity { load: f64, capacity: f64 },
    Precedence { request: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

/// A worker's subtour together with its realization on the road graph.
///
/// `legs[k]` connects `nodes[k]` to `nodes[k + 1]` and is built for `tags[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub worker: u64,
    pub vehicle: usize,
    pub capacity: f64,
    pub(crate) nodes: Vec<PdNode>,
    pub(crate) tags: Vec<LegTag>,
    pub(crate) labels: Vec<Label>,
    pub(crate) legs: Vec<Leg>,
}

/// Label of `node` reached at `arrive` carrying `load_before`.
pub(crate) fn node_label(node: &PdNode, arrive: f64, load_before: f64) -> Label {
    let ready = match node.kind {
        NodeKind::Pickup => arrive.max(node.ready) + node.service,
        NodeKind::Delivery => arrive + node.service,
        NodeKind::ShiftStart | NodeKind::ShiftEnd => arrive,
    };
    let depart = match node.kind {
        NodeKind::ShiftEnd => ready,
        _ => ready.max(node.hold),
    };
    Label {
        arrive,
        depart,
        wait: depart - arrive - node.service,
        load: load_before + node.load_delta(),
    }
}

/// Realizes the leg out of `from` and labels `to`.
pub(crate) fn advance(
    router: &Router,
    vehicle: usize,
    from: &PdNode,
    from_label: &Label,
    tag: LegTag,
    to: &PdNode,
) -> Result<(Leg, Label), RouteError> {
    let depart = from_label.depart;
    let plan = router
        .leg(from.vertex, to.vertex, vehicle, depart, tag)
        .ok_or(RouteError::Disconnected {
            from: from.vertex,
            to: to.vertex,
        })?;
    // measured against the free-flow bound between the endpoints, not the
    // path's own minimum, so it also bounds delay shrinkage on rerouted legs
    let bound = router.lower_bound(from.vertex, to.vertex, vehicle);
    let travel = plan.arrive - depart;
    let leg = Leg {
        tag,
        depart,
        arrive: plan.arrive,
        length: plan.length,
        gap: (travel - bound).max(0.0),
        arcs: plan.arcs,
    };
    let label = node_label(to, plan.arrive, from_label.load);
    Ok((leg, label))
}

impl Route {
    /// Builds and labels a route for an explicit node sequence.
    pub fn realize(
        worker: u64,
        vehicle: usize,
        capacity: f64,
        nodes: Vec<PdNode>,
        tags: Vec<LegTag>,
        router: &Router,
    ) -> Result<Self, RouteError> {
        if nodes.len() < 2
            || nodes[0].kind != NodeKind::ShiftStart
            || nodes[nodes.len() - 1].kind != NodeKind::ShiftEnd
        {
            return Err(RouteError::Malformed(
                "subtour must run from a shift start to a shift end".into(),
            ));
        }
        if nodes[1..nodes.len() - 1].iter().any(|n| !n.is_request()) {
            return Err(RouteError::Malformed("interior shift node".into()));
        }
        if tags.len() + 1 != nodes.len() {
            return Err(RouteError::Malformed(
                "one leg tag per consecutive pair".into(),
            ));
        }
        let mut route = Route {
            worker,
            vehicle,
            capacity,
            nodes,
            tags,
            labels: Vec::new(),
            legs: Vec::new(),
        };
        route.relabel_from(router, 0)?;
        Ok(route)
    }

    /// Route with every leg built for `metric`.
    pub fn with_metric(
        worker: u64,
        vehicle: usize,
        capacity: f64,
        nodes: Vec<PdNode>,
        metric: Metric,
        router: &Router,
    ) -> Result<Self, RouteError> {
        let tags = vec![metric.leg_tag(); nodes.len().saturating_sub(1)];
        Self::realize(worker, vehicle, capacity, nodes, tags, router)
    }

    /// Recomputes the leg into node `k` and every label from `k` on.
    pub fn relabel_from(&mut self, router: &Router, k: usize) -> Result<(), RouteError> {
        let n = self.nodes.len();
        if k >= n {
            return Err(RouteError::OutOfRange { index: k, len: n });
        }
        self.labels.truncate(k);
        self.legs.truncate(k.saturating_sub(1));
        if k == 0 {
            let start = &self.nodes[0];
            self.labels.push(node_label(start, start.ready, 0.0));
        }
        for m in self.labels.len()..n {
            let (leg, label) = advance(
                router,
                self.vehicle,
                &self.nodes[m - 1],
                &self.labels[m - 1],
                self.tags[m - 1],
                &self.nodes[m],
            )?;
            self.legs.push(leg);
            self.labels.push(label);
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[PdNode] {
        &self.nodes
    }

    pub fn tags(&self) -> &[LegTag] {
        &self.tags
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True for a subtour holding only the shift nodes.
    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 2
    }

    pub fn shift_start(&self) -> f64 {
        self.nodes[0].ready
    }

    pub fn shift_end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].deadline
    }

    /// Total length in meters.
    pub fn length(&self) -> f64 {
        self.legs.iter().map(|l| l.length).sum()
    }

    /// Total in-motion time in seconds.
    pub fn travel_time(&self) -> f64 {
        self.legs.iter().map(Leg::travel_time).sum()
    }

    pub fn cost(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Distance => self.length(),
            Metric::Time => self.travel_time(),
        }
    }

    /// Position of the node `(kind, owner)`.
    pub fn position(&self, kind: NodeKind, owner: u64) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n.kind == kind && n.owner == owner)
    }

    /// Request ids in pickup order.
    pub fn requests(&self) -> impl Iterator<Item = u64> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Pickup)
            .map(|n| n.owner)
    }

    /// Lists every violated constraint; empty means feasible.
    pub fn check_feasible(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut open: Vec<u64> = Vec::new();
        let mut seen_pickups: Vec<u64> = Vec::new();
        for (index, (node, label)) in self.nodes.iter().zip(&self.labels).enumerate() {
            match node.kind {
                NodeKind::Delivery if label.arrive > node.deadline + TOL => out.push(Violation {
                    index,
                    kind: ViolationKind::Deadline {
                        arrive: label.arrive,
                        deadline: node.deadline,
                    },
                }),
                NodeKind::ShiftEnd if label.arrive > node.deadline + TOL => out.push(Violation {
                    index,
                    kind: ViolationKind::ShiftEnd {
                        arrive: label.arrive,
                        end: node.deadline,
                    },
                }),
                _ => {}
            }
            if label.load > self.capacity + TOL || label.load < -TOL {
                out.push(Violation {
                    index,
                    kind: ViolationKind::Capacity {
                        load: label.load,
                        capacity: self.capacity,
                    },
                });
            }
            match node.kind {
                NodeKind::Pickup => {
                    if seen_pickups.contains(&node.owner) {
                        out.push(Violation {
                            index,
                            kind: ViolationKind::Precedence {
                                request: node.owner,
                            },
                        });
                    }
                    seen_pickups.push(node.owner);
                    if !node.is_virtual {
                        open.push(node.owner);
                    }
                }
                NodeKind::Delivery => {
                    if !seen_pickups.contains(&node.owner) {
                        out.push(Violation {
                            index,
                            kind: ViolationKind::Precedence {
                                request: node.owner,
                            },
                        });
                    }
                    open.retain(|&r| r != node.owner);
                }
                _ => {}
            }
        }
        for r in open {
            let index = self.position(NodeKind::Pickup, r).unwrap_or(0);
            out.push(Violation {
                index,
                kind: ViolationKind::Precedence { request: r },
            });
        }
        out
    }

    pub fn is_feasible(&self) -> bool {
        self.check_feasible().is_empty()
    }

    /// Node and tag sequences without the nodes matching `drop`; each merged
    /// leg inherits the tag of the leg leaving the last kept node before it.
    /// Also returns the index of the first dropped node (`len` if none).
    pub(crate) fn without(
        &self,
        drop: impl Fn(&PdNode) -> bool,
    ) -> (Vec<PdNode>, Vec<LegTag>, usize) {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let mut tags = Vec::with_capacity(self.tags.len());
        let mut first = self.nodes.len();
        let mut last_kept = 0;
        for (k, node) in self.nodes.iter().enumerate() {
            if node.is_request() && drop(node) {
                first = first.min(k);
                continue;
            }
            if k > 0 {
                tags.push(self.tags[last_kept]);
            }
            last_kept = k;
            nodes.push(node.clone());
        }
        (nodes, tags, first)
    }

    /// Shortcuts out every request node matching `drop`. Merged legs inherit
    /// tags; if that breaks a feasible route they are rebuilt time-optimal,
    /// which under FIFO never arrives later than the detour did.
    pub fn remove_where(
        &self,
        drop: impl Fn(&PdNode) -> bool + Copy,
        router: &Router,
    ) -> Result<Option<Route>, RouteError> {
        let (nodes, tags, first) = self.without(drop);
        if first == self.nodes.len() {
            return Ok(None);
        }
        let mut out = Route {
            nodes,
            tags,
            labels: self.labels[..first].to_vec(),
            legs: self.legs[..first - 1].to_vec(),
            ..self.clone()
        };
        out.relabel_from(router, first)?;
        if !out.is_feasible() && self.is_feasible() {
            let merged: Vec<usize> = self
                .merged_leg_positions(drop)
                .into_iter()
                .filter(|&k| out.tags[k] != LegTag::TimeOptimal)
                .collect();
            for &k in &merged {
                out.tags[k] = LegTag::TimeOptimal;
            }
            if let Some(&k) = merged.first() {
                out.relabel_from(router, k + 1)?;
            }
        }
        Ok(Some(out))
    }

    /// Shortcuts out request `r`'s nodes.
    pub fn remove_request(&self, r: u64, router: &Router) -> Result<Option<Route>, RouteError> {
        self.remove_where(|n| n.owner == r, router)
    }

    /// Indices, in the shortened route, of legs that replace dropped nodes.
    fn merged_leg_positions(&self, drop: impl Fn(&PdNode) -> bool) -> Vec<usize> {
        let mut out = Vec::new();
        let mut kept = 0usize;
        let mut prev_removed = false;
        for node in &self.nodes {
            let removed = node.is_request() && drop(node);
            if removed && !prev_removed {
                out.push(kept - 1);
            }
            if !removed {
                kept += 1;
            }
            prev_removed = removed;
        }
        out
    }
}
