use std::collections::HashMap;

use serde::Serialize;

use super::MilpError;
use crate::metric::{
    compose_arcs, earliest_arrival, extract_path, ArrivalLabel, LegTag, Router, VertexId,
};
use crate::pd::{
    build_pd_graph, request_nodes, worker_nodes, Metric, NodeKind, PdGraph, PdNode, Request, Worker,
};

/// One interconnecting path estimate for a PD arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LegEstimate {
    pub tag: LegTag,
    /// Travel time plus the service time at the head node.
    pub tau: f64,
    pub length: f64,
}

/// Scalar estimates for one PD arc and one vehicle type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarArc {
    /// Index into the PD graph's arc list.
    pub pd_arc: usize,
    pub tail: usize,
    pub head: usize,
    pub vehicle: usize,
    /// Departure time the estimate was taken at.
    pub depart: f64,
    /// Service time embedded in every `tau`.
    pub service: f64,
    /// One time-optimal estimate, or a distance-optimal and time-optimal pair.
    pub legs: Vec<LegEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedArc {
    pub tail: usize,
    pub head: usize,
    pub vehicle: usize,
}

/// PD graph with per-arc scalar travel times and lengths.
#[derive(Debug, Clone)]
pub struct ScalarizedPdGraph {
    pub pd: PdGraph,
    pub nodes: Vec<PdNode>,
    pub requests: Vec<Request>,
    pub workers: Vec<Worker>,
    /// Vehicle type index per worker.
    pub vehicles: Vec<usize>,
    pub metric: Metric,
    pub arcs: Vec<ScalarArc>,
    pub dropped: Vec<DroppedArc>,
    index: HashMap<(usize, usize, usize), usize>,
}

impl ScalarizedPdGraph {
    pub fn arc(&self, tail: usize, head: usize, vehicle: usize) -> Option<&ScalarArc> {
        self.index
            .get(&(tail, head, vehicle))
            .map(|&k| &self.arcs[k])
    }

    /// Arc usable by worker `w`: own start and end only, eligible requests only.
    pub fn arc_for(&self, tail: usize, head: usize, w: usize) -> Option<&ScalarArc> {
        let pd = &self.pd;
        let own = |v: usize| match self.nodes[v].kind {
            NodeKind::ShiftStart => v == pd.start(w),
            NodeKind::ShiftEnd => v == pd.end(w),
            _ => true,
        };
        if !own(tail) || !own(head) {
            return None;
        }
        self.arc(tail, head, self.vehicles[w])
    }

    pub fn variants(&self) -> usize {
        match self.metric {
            Metric::Time => 1,
            Metric::Distance => 2,
        }
    }

    /// Lower and upper bound on `a_v`, the service completion time at `v`.
    pub fn window(&self, v: usize) -> (f64, f64) {
        let n = &self.nodes[v];
        match n.kind {
            NodeKind::ShiftStart | NodeKind::ShiftEnd => {
                let w = &self.workers[self.worker_index(n.owner)];
                (w.start_time, w.end_time)
            }
            NodeKind::Pickup | NodeKind::Delivery => {
                let r = &self.requests[self.request_index(n.owner)];
                (
                    r.earliest_pickup_time + r.pickup_service_time,
                    r.latest_delivery_time + r.delivery_service_time,
                )
            }
        }
    }

    pub fn worker_index(&self, id: u64) -> usize {
        self.workers
            .iter()
            .position(|w| w.id == id)
            .expect("known worker")
    }

    pub fn request_index(&self, id: u64) -> usize {
        self.requests
            .iter()
            .position(|r| r.id == id)
            .expect("known request")
    }

    /// Cost coefficient of a leg estimate: length, or travel time without service.
    pub fn cost(&self, arc: &ScalarArc, leg: &LegEstimate) -> f64 {
        match self.metric {
            Metric::Distance => leg.length,
            Metric::Time => leg.tau - arc.service,
        }
    }
}

type Tree = Vec<Option<ArrivalLabel<f64>>>;

struct Estimator<'a> {
    router: &'a Router,
    metric: Metric,
}

impl Estimator<'_> {
    fn tree(&self, from: VertexId, vehicle: usize, depart: f64) -> Result<Tree, MilpError> {
        Ok(earliest_arrival(
            self.router.graph(),
            vehicle,
            from,
            depart,
        )?)
    }

    /// Leg estimates from the source of `tree` to `to`, or `None` if unreachable.
    fn legs(
        &self,
        tree: &Tree,
        from: VertexId,
        to: VertexId,
        vehicle: usize,
        depart: f64,
        service: f64,
    ) -> Option<Vec<LegEstimate>> {
        let g = self.router.graph();
        let label = tree[to]?;
        let path = extract_path(to, |v| tree[v].and_then(|l| l.via), g);
        let time = LegEstimate {
            tag: LegTag::TimeOptimal,
            tau: label.arrival - depart + service,
            length: path.iter().map(|&a| g.arc(a).length).sum(),
        };
        match self.metric {
            Metric::Time => Some(vec![time]),
            Metric::Distance => {
                let (length, arcs) = self.router.distance_path(from, to)?;
                let (arrive, _) = compose_arcs(g, vehicle, &arcs, depart).ok()?;
                let dist = LegEstimate {
                    tag: LegTag::DistanceOptimal,
                    tau: arrive - depart + service,
                    length,
                };
                Some(vec![dist, time])
            }
        }
    }
}

/// Three-phase scalar estimates over the PD graph of `requests` and `workers`.
///
/// Arcs out of shift starts depart at the shift start; arcs out of pickups
/// depart at the later of the earliest pickup time and the earliest arrival
/// of any worker of that vehicle type; arcs out of deliveries depart at the
/// earliest arrival from their own pickup over eligible vehicle types.
#[allow(clippy::needless_range_loop)]
pub fn scalarize(
    router: &Router,
    requests: &[Request],
    workers: &[Worker],
    metric: Metric,
) -> Result<ScalarizedPdGraph, MilpError> {
    let g = router.graph();
    let pd = build_pd_graph(requests, workers);
    let mut starts = Vec::new();
    let mut ends = Vec::new();
    let mut vehicles = Vec::new();
    for w in workers {
        let (s, e) = worker_nodes(g, w)?;
        starts.push(s);
        ends.push(e);
        vehicles.push(w.vehicle_index(g)?);
    }
    let mut pickups = Vec::new();
    let mut deliveries = Vec::new();
    for r in requests {
        let (p, d) = request_nodes(g, r)?;
        pickups.push(p);
        deliveries.push(d);
    }
    let nodes: Vec<PdNode> = starts
        .into_iter()
        .chain(pickups)
        .chain(deliveries)
        .chain(ends)
        .collect();
    let mut types: Vec<usize> = vehicles.clone();
    types.sort_unstable();
    types.dedup();
    let type_names = g.vehicle_types();
    let eligible = |r: usize, h: usize| requests[r].eligible(&type_names[h]);
    let serves = |v: usize, h: usize| match nodes[v].kind {
        NodeKind::Pickup | NodeKind::Delivery => eligible(request_of(&pd, v), h),
        _ => true,
    };

    let est = Estimator { router, metric };
    let mut arcs: Vec<ScalarArc> = Vec::new();
    let mut dropped = Vec::new();
    let arc_ids: HashMap<(usize, usize), usize> =
        pd.arcs.iter().enumerate().map(|(k, &a)| (a, k)).collect();
    let mut push = |tail: usize,
                    head: usize,
                    h: usize,
                    depart: f64,
                    tree: Option<&Tree>,
                    arcs: &mut Vec<ScalarArc>| {
        let service = nodes[head].service;
        let legs = tree.and_then(|t| {
            est.legs(
                t,
                nodes[tail].vertex,
                nodes[head].vertex,
                h,
                depart,
                service,
            )
        });
        match legs {
            Some(legs) => arcs.push(ScalarArc {
                pd_arc: arc_ids[&(tail, head)],
                tail,
                head,
                vehicle: h,
                depart,
                service,
                legs,
            }),
            None => {
                log::warn!("PD arc {tail}->{head} unreachable for vehicle type {h}; dropped");
                dropped.push(DroppedArc {
                    tail,
                    head,
                    vehicle: h,
                });
            }
        }
    };

    // phase 1
    let nr = requests.len();
    let mut first_arrival = vec![vec![f64::INFINITY; type_names.len()]; nr];
    for (w, worker) in workers.iter().enumerate() {
        let h = vehicles[w];
        let s = pd.start(w);
        let tree = est.tree(nodes[s].vertex, h, worker.start_time)?;
        for r in (0..nr).filter(|&r| eligible(r, h)) {
            let p = pd.pickup(r);
            if let Some(l) = tree[nodes[p].vertex] {
                first_arrival[r][h] = first_arrival[r][h].min(l.arrival);
            }
            push(s, p, h, worker.start_time, Some(&tree), &mut arcs);
        }
    }
    // phase 2
    let mut delivery_arrival = vec![f64::INFINITY; nr];
    for r in 0..nr {
        let p = pd.pickup(r);
        for &h in types.iter().filter(|&&h| eligible(r, h)) {
            let depart = requests[r].earliest_pickup_time.max(first_arrival[r][h]);
            let tree = match depart.is_finite() {
                true => Some(est.tree(nodes[p].vertex, h, depart)?),
                false => None,
            };
            if let Some(l) = tree.as_ref().and_then(|t| t[nodes[pd.delivery(r)].vertex]) {
                delivery_arrival[r] = delivery_arrival[r].min(l.arrival);
            }
            for &(u, v) in pd.arcs.iter().filter(|&&(u, v)| u == p && serves(v, h)) {
                push(u, v, h, depart, tree.as_ref(), &mut arcs);
            }
        }
    }
    // phase 3
    for r in 0..nr {
        let d = pd.delivery(r);
        let depart = delivery_arrival[r];
        for &h in types.iter().filter(|&&h| eligible(r, h)) {
            let tree = match depart.is_finite() {
                true => Some(est.tree(nodes[d].vertex, h, depart)?),
                false => None,
            };
            let heads = pd.arcs.iter().filter(|&&(u, v)| {
                u == d
                    && serves(v, h)
                    && match nodes[v].kind {
                        NodeKind::ShiftEnd => vehicles[v - pd.end(0)] == h,
                        _ => true,
                    }
            });
            for &(u, v) in heads {
                push(u, v, h, depart, tree.as_ref(), &mut arcs);
            }
        }
    }
    arcs.sort_by_key(|a| (a.pd_arc, a.vehicle));
    let index = arcs
        .iter()
        .enumerate()
        .map(|(k, a)| ((a.tail, a.head, a.vehicle), k))
        .collect();
    Ok(ScalarizedPdGraph {
        pd,
        nodes,
        requests: requests.to_vec(),
        workers: workers.to_vec(),
        vehicles,
        metric,
        arcs,
        dropped,
        index,
    })
}

fn request_of(pd: &PdGraph, v: usize) -> usize {
    let base = v - pd.num_workers;
    if base < pd.num_requests {
        base
    } else {
        base - pd.num_requests
    }
}
