use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::graph::{ArcId, RoadGraph, VertexId};
use super::query::{compose_arcs, extract_path, shortest_distance, DistanceLabel, HeapEntry};

/// Which optimum an interconnecting road path was chosen for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LegTag {
    DistanceOptimal,
    TimeOptimal,
}

/// A realized interconnecting path between two service vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct LegPlan {
    pub arrive: f64,
    pub length: f64,
    pub arcs: Arc<[ArcId]>,
}

type DistanceTree = Arc<Vec<Option<DistanceLabel<f64>>>>;

/// Memoizing query front-end over an immutable graph.
///
/// Time-optimal legs use A* with a free-flow potential (reverse Dijkstra on
/// each arc's minimum travel time), which is admissible and consistent for
/// FIFO functions, so results equal plain time-dependent Dijkstra.
type PathCache = HashMap<(VertexId, VertexId), Option<(f64, Arc<[ArcId]>)>>;
type LegCache = HashMap<(VertexId, VertexId, usize, u64), Option<LegPlan>>;
type PotentialCache = HashMap<(VertexId, usize), Arc<Vec<f64>>>;

#[derive(Debug)]
pub struct Router {
    graph: Arc<RoadGraph<f64>>,
    distance_trees: Mutex<HashMap<VertexId, DistanceTree>>,
    distance_paths: Mutex<PathCache>,
    time_legs: Mutex<LegCache>,
    potentials: Mutex<PotentialCache>,
    td_searches: AtomicU64,
}

impl Router {
    pub fn new(graph: Arc<RoadGraph<f64>>) -> Self {
        Self {
            graph,
            distance_trees: Mutex::default(),
            distance_paths: Mutex::default(),
            time_legs: Mutex::default(),
            potentials: Mutex::default(),
            td_searches: AtomicU64::new(0),
        }
    }

    pub fn graph(&self) -> &RoadGraph<f64> {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<RoadGraph<f64>> {
        Arc::clone(&self.graph)
    }

    /// Number of uncached time-dependent searches run so far.
    pub fn td_searches(&self) -> u64 {
        self.td_searches.load(Ordering::Relaxed)
    }

    /// Interconnecting path from `from` to `to` departing at `depart`.
    /// `None` when `to` is unreachable.
    pub fn leg(
        &self,
        from: VertexId,
        to: VertexId,
        vehicle: usize,
        depart: f64,
        tag: LegTag,
    ) -> Option<LegPlan> {
        if from == to {
            return Some(LegPlan {
                arrive: depart,
                length: 0.0,
                arcs: Arc::from(Vec::new()),
            });
        }
        match tag {
            LegTag::DistanceOptimal => {
                let (length, arcs) = self.distance_path(from, to)?;
                let (arrive, _) = compose_arcs(&self.graph, vehicle, &arcs, depart).ok()?;
                Some(LegPlan {
                    arrive,
                    length,
                    arcs,
                })
            }
            LegTag::TimeOptimal => self.time_leg(from, to, vehicle, depart),
        }
    }

    /// Minimum-length path as `(length, arcs)`.
    pub fn distance_path(&self, from: VertexId, to: VertexId) -> Option<(f64, Arc<[ArcId]>)> {
        if let Some(hit) = self.distance_paths.lock().unwrap().get(&(from, to)) {
            return hit.clone();
        }
        let tree = self.distance_tree(from);
        let result = tree[to].map(|l| {
            let arcs = extract_path(to, |v| tree[v].and_then(|x| x.via), &self.graph);
            (l.distance, Arc::from(arcs))
        });
        self.distance_paths
            .lock()
            .unwrap()
            .insert((from, to), result.clone());
        result
    }

    pub fn distance(&self, from: VertexId, to: VertexId) -> Option<f64> {
        self.distance_tree(from)[to].map(|l| l.distance)
    }

    fn distance_tree(&self, from: VertexId) -> DistanceTree {
        if let Some(t) = self.distance_trees.lock().unwrap().get(&from) {
            return Arc::clone(t);
        }
        let tree = Arc::new(shortest_distance(&self.graph, from).expect("valid origin"));
        self.distance_trees
            .lock()
            .unwrap()
            .insert(from, Arc::clone(&tree));
        tree
    }

    /// Earliest-arrival leg departing at `depart`.
    pub fn time_leg(
        &self,
        from: VertexId,
        to: VertexId,
        vehicle: usize,
        depart: f64,
    ) -> Option<LegPlan> {
        let key = (from, to, vehicle, depart.to_bits());
        if let Some(hit) = self.time_legs.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let result = self.astar(from, to, vehicle, depart);
        self.time_legs.lock().unwrap().insert(key, result.clone());
        result
    }

    /// Lower bound on travel time from `from` to `to` at any departure time.
    pub fn lower_bound(&self, from: VertexId, to: VertexId, vehicle: usize) -> f64 {
        self.potential(to, vehicle)[from]
    }

    /// Sum of per-arc minimum travel times along `arcs`.
    pub fn path_min_time(&self, arcs: &[ArcId], vehicle: usize) -> f64 {
        arcs.iter()
            .map(|&a| self.graph.arc(a).ttf[vehicle].min_value())
            .sum()
    }

    fn potential(&self, target: VertexId, vehicle: usize) -> Arc<Vec<f64>> {
        if let Some(p) = self.potentials.lock().unwrap().get(&(target, vehicle)) {
            return Arc::clone(p);
        }
        let g = &self.graph;
        let n = g.num_vertices();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[target] = 0.0;
        heap.push(HeapEntry {
            key: 0.0,
            vertex: target,
        });
        while let Some(HeapEntry { key, vertex }) = heap.pop() {
            if done[vertex] {
                continue;
            }
            done[vertex] = true;
            for &a in g.in_arcs(vertex) {
                let arc = g.arc(a);
                let d = key + arc.ttf[vehicle].min_value();
                if d < dist[arc.tail] {
                    dist[arc.tail] = d;
                    heap.push(HeapEntry {
                        key: d,
                        vertex: arc.tail,
                    });
                }
            }
        }
        let p = Arc::new(dist);
        self.potentials
            .lock()
            .unwrap()
            .insert((target, vehicle), Arc::clone(&p));
        p
    }

    fn astar(&self, from: VertexId, to: VertexId, vehicle: usize, depart: f64) -> Option<LegPlan> {
        let h = self.potential(to, vehicle);
        if !h[from].is_finite() {
            return None;
        }
        self.td_searches.fetch_add(1, Ordering::Relaxed);
        let g = &self.graph;
        let n = g.num_vertices();
        let mut arrival = vec![f64::INFINITY; n];
        let mut via: Vec<Option<ArcId>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        arrival[from] = depart;
        heap.push(HeapEntry {
            key: depart + h[from],
            vertex: from,
        });
        while let Some(HeapEntry { vertex, .. }) = heap.pop() {
            if done[vertex] {
                continue;
            }
            done[vertex] = true;
            if vertex == to {
                break;
            }
            let t = arrival[vertex];
            for &a in g.out_arcs(vertex) {
                let arc = g.arc(a);
                if done[arc.head] || !h[arc.head].is_finite() {
                    continue;
                }
                let at = arc.ttf[vehicle].arrival(t);
                if at < arrival[arc.head] {
                    arrival[arc.head] = at;
                    via[arc.head] = Some(a);
                    heap.push(HeapEntry {
                        key: at + h[arc.head],
                        vertex: arc.head,
                    });
                }
            }
        }
        if !done[to] {
            return None;
        }
        let arcs = extract_path(to, |v| via[v], g);
        let length = arcs.iter().map(|&a| g.arc(a).length).sum();
        Some(LegPlan {
            arrive: arrival[to],
            length,
            arcs: Arc::from(arcs),
        })
    }
}
