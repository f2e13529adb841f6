use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::graph::{ArcId, RoadGraph, VertexId};
use super::MetricError;
use crate::scalar::{cmp, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalLabel<T> {
    pub arrival: T,
    pub pred: Option<VertexId>,
    pub via: Option<ArcId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceLabel<T> {
    pub distance: T,
    pub pred: Option<VertexId>,
    pub via: Option<ArcId>,
}

/// Min-heap entry; equal keys pop the smaller vertex first.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HeapEntry<T> {
    pub key: T,
    pub vertex: VertexId,
}

impl<T: Scalar> PartialEq for HeapEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for HeapEntry<T> {}
impl<T: Scalar> PartialOrd for HeapEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for HeapEntry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp(other.key, self.key).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// One-to-all earliest arrival from `origin` departing at `departure`.
///
/// Label-setting is exact because every arc function is FIFO.
pub fn earliest_arrival<T: Scalar>(
    g: &RoadGraph<T>,
    vehicle: usize,
    origin: VertexId,
    departure: T,
) -> Result<Vec<Option<ArrivalLabel<T>>>, MetricError> {
    g.check_vertex(origin)?;
    g.check_vehicle(vehicle)?;
    let n = g.num_vertices();
    let mut labels: Vec<Option<ArrivalLabel<T>>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    labels[origin] = Some(ArrivalLabel {
        arrival: departure,
        pred: None,
        via: None,
    });
    heap.push(HeapEntry {
        key: departure,
        vertex: origin,
    });
    while let Some(HeapEntry { key, vertex }) = heap.pop() {
        if done[vertex] {
            continue;
        }
        done[vertex] = true;
        for &a in g.out_arcs(vertex) {
            let arc = g.arc(a);
            if done[arc.head] {
                continue;
            }
            let t = arc.ttf[vehicle].arrival(key);
            let better = match labels[arc.head] {
                None => true,
                Some(l) => t < l.arrival,
            };
            if better {
                labels[arc.head] = Some(ArrivalLabel {
                    arrival: t,
                    pred: Some(vertex),
                    via: Some(a),
                });
                heap.push(HeapEntry {
                    key: t,
                    vertex: arc.head,
                });
            }
        }
    }
    Ok(labels)
}

/// One-to-all minimum path length.
pub fn shortest_distance<T: Scalar>(
    g: &RoadGraph<T>,
    origin: VertexId,
) -> Result<Vec<Option<DistanceLabel<T>>>, MetricError> {
    g.check_vertex(origin)?;
    let n = g.num_vertices();
    let mut labels: Vec<Option<DistanceLabel<T>>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    labels[origin] = Some(DistanceLabel {
        distance: T::zero(),
        pred: None,
        via: None,
    });
    heap.push(HeapEntry {
        key: T::zero(),
        vertex: origin,
    });
    while let Some(HeapEntry { key, vertex }) = heap.pop() {
        if done[vertex] {
            continue;
        }
        done[vertex] = true;
        for &a in g.out_arcs(vertex) {
            let arc = g.arc(a);
            if done[arc.head] {
                continue;
            }
            let d = key + arc.length;
            let better = match labels[arc.head] {
                None => true,
                Some(l) => d < l.distance,
            };
            if better {
                labels[arc.head] = Some(DistanceLabel {
                    distance: d,
                    pred: Some(vertex),
                    via: Some(a),
                });
                heap.push(HeapEntry {
                    key: d,
                    vertex: arc.head,
                });
            }
        }
    }
    Ok(labels)
}

/// Walks predecessor arcs back from `target`; `via(v)` yields the arc that
/// reached `v`. Returns arcs in travel order.
pub fn extract_path(
    target: VertexId,
    via: impl Fn(VertexId) -> Option<ArcId>,
    g: &RoadGraph<impl Scalar>,
) -> Vec<ArcId> {
    let mut arcs = Vec::new();
    let mut v = target;
    while let Some(a) = via(v) {
        arcs.push(a);
        v = g.arc(a).tail;
    }
    arcs.reverse();
    arcs
}

/// Folds the arrival recurrence along a vertex path. Where parallel arcs
/// connect a pair, the one with the earliest arrival is taken.
pub fn compose_arrival<T: Scalar>(
    g: &RoadGraph<T>,
    vehicle: usize,
    path: &[VertexId],
    departure: T,
) -> Result<(T, T), MetricError> {
    g.check_vehicle(vehicle)?;
    for &v in path {
        g.check_vertex(v)?;
    }
    let mut t = departure;
    let mut length = T::zero();
    for (at, w) in path.windows(2).enumerate() {
        let best = g
            .out_arcs(w[0])
            .iter()
            .map(|&a| g.arc(a))
            .filter(|a| a.head == w[1])
            .map(|a| (a.ttf[vehicle].arrival(t), a.length))
            .min_by(|x, y| cmp(x.0, y.0).then(cmp(x.1, y.1)))
            .ok_or(MetricError::InvalidPath { at })?;
        t = best.0;
        length = length + best.1;
    }
    Ok((t, length))
}

/// Same fold over an explicit arc sequence.
pub fn compose_arcs<T: Scalar>(
    g: &RoadGraph<T>,
    vehicle: usize,
    arcs: &[ArcId],
    departure: T,
) -> Result<(T, T), MetricError> {
    g.check_vehicle(vehicle)?;
    let mut t = departure;
    let mut length = T::zero();
    for (at, &a) in arcs.iter().enumerate() {
        if a >= g.num_arcs() {
            return Err(MetricError::InvalidPath { at });
        }
        if at > 0 && g.arc(arcs[at - 1]).head != g.arc(a).tail {
            return Err(MetricError::InvalidPath { at: at - 1 });
        }
        let arc = g.arc(a);
        t = arc.ttf[vehicle].arrival(t);
        length = length + arc.length;
    }
    Ok((t, length))
}

/// Nearest vertex by Euclidean distance; ties go to the smaller vertex id.
pub fn snap_to_graph<T: Scalar>(g: &RoadGraph<T>, x: T, y: T) -> Result<VertexId, MetricError> {
    let mut best: Option<(T, VertexId)> = None;
    for v in 0..g.num_vertices() {
        if let Some((vx, vy)) = g.coords(v) {
            let d = (vx - x) * (vx - x) + (vy - y) * (vy - y);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, v));
            }
        }
    }
    best.map(|b| b.1).ok_or(MetricError::NoCoordinates)
}
