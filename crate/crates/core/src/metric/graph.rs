use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::ttf::TravelTimeFunction;
use super::MetricError;
use crate::scalar::Scalar;

/// Dense vertex index. Vertices are stored sorted by external id, so index
/// order and id order agree.
pub type VertexId = usize;
pub type ArcId = usize;

#[derive(Debug, Clone)]
pub struct RoadArc<T> {
    pub tail: VertexId,
    pub head: VertexId,
    pub length: T,
    /// One function per vehicle type, indexed like [`RoadGraph::vehicle_types`].
    pub ttf: Vec<TravelTimeFunction<T>>,
}

/// Directed road network with static lengths and time-dependent travel times.
#[derive(Debug, Clone)]
pub struct RoadGraph<T> {
    vehicle_types: Vec<String>,
    external_ids: Vec<u64>,
    coords: Vec<Option<(T, T)>>,
    arcs: Vec<RoadArc<T>>,
    out_arcs: Vec<Vec<ArcId>>,
    in_arcs: Vec<Vec<ArcId>>,
}

impl<T: Scalar> RoadGraph<T> {
    pub fn vehicle_types(&self) -> &[String] {
        &self.vehicle_types
    }

    pub fn vehicle_index(&self, name: &str) -> Result<usize, MetricError> {
        self.vehicle_types
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| MetricError::UnknownVehicleType(name.to_string()))
    }

    pub fn num_vertices(&self) -> usize {
        self.external_ids.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn arc(&self, id: ArcId) -> &RoadArc<T> {
        &self.arcs[id]
    }

    pub fn arcs(&self) -> &[RoadArc<T>] {
        &self.arcs
    }

    pub fn out_arcs(&self, v: VertexId) -> &[ArcId] {
        &self.out_arcs[v]
    }

    pub fn in_arcs(&self, v: VertexId) -> &[ArcId] {
        &self.in_arcs[v]
    }

    pub fn external_id(&self, v: VertexId) -> u64 {
        self.external_ids[v]
    }

    pub fn vertex_of(&self, external: u64) -> Option<VertexId> {
        self.external_ids.binary_search(&external).ok()
    }

    pub fn coords(&self, v: VertexId) -> Option<(T, T)> {
        self.coords[v]
    }

    pub(crate) fn check_vertex(&self, v: VertexId) -> Result<(), MetricError> {
        if v < self.num_vertices() {
            Ok(())
        } else {
            Err(MetricError::UnknownVertex(v))
        }
    }

    pub(crate) fn check_vehicle(&self, h: usize) -> Result<(), MetricError> {
        if h < self.vehicle_types.len() {
            Ok(())
        } else {
            Err(MetricError::UnknownVehicleType(format!("#{h}")))
        }
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            vertices: (0..self.num_vertices())
                .map(|v| {
                    let (x, y) = self.coords[v].unwrap_or((T::zero(), T::zero()));
                    VertexRecord {
                        id: self.external_ids[v],
                        x: x.to_f64().unwrap_or(0.0),
                        y: y.to_f64().unwrap_or(0.0),
                    }
                })
                .collect(),
            arcs: self
                .arcs
                .iter()
                .map(|a| ArcRecord {
                    tail: self.external_ids[a.tail],
                    head: self.external_ids[a.head],
                    length_m: a.length.to_f64().unwrap_or(0.0),
                    ttf: self
                        .vehicle_types
                        .iter()
                        .zip(&a.ttf)
                        .map(|(name, f)| {
                            (
                                name.clone(),
                                TtfRecord {
                                    period_s: f.period().to_f64().unwrap_or(0.0),
                                    breakpoints: f
                                        .breakpoints()
                                        .iter()
                                        .map(|&(t, v)| {
                                            [t.to_f64().unwrap_or(0.0), v.to_f64().unwrap_or(0.0)]
                                        })
                                        .collect(),
                                },
                            )
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &GraphFile) -> Result<Self, MetricError> {
        let types: Vec<String> = file
            .arcs
            .iter()
            .flat_map(|a| a.ttf.keys().cloned())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut b = RoadGraphBuilder::new(types.clone());
        for v in &file.vertices {
            b.vertex(v.id, Some((T::lit(v.x), T::lit(v.y))));
        }
        for (index, a) in file.arcs.iter().enumerate() {
            let mut ttfs = Vec::with_capacity(types.len());
            for ty in &types {
                let rec = a.ttf.get(ty).ok_or_else(|| MetricError::MissingTtf {
                    arc: index,
                    vehicle_type: ty.clone(),
                })?;
                let f = TravelTimeFunction::new(
                    T::lit(rec.period_s),
                    rec.breakpoints
                        .iter()
                        .map(|p| (T::lit(p[0]), T::lit(p[1])))
                        .collect(),
                )
                .map_err(|source| MetricError::BadTtf {
                    arc: index,
                    tail: a.tail,
                    head: a.head,
                    vehicle_type: ty.clone(),
                    source,
                })?;
                ttfs.push(f);
            }
            b.arc(a.tail, a.head, T::lit(a.length_m), ttfs);
        }
        b.build()
    }

    pub fn from_json(text: &str) -> Result<Self, MetricError> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| MetricError::Parse(e.to_string()))?;
        Self::from_file(&file)
    }
}

/// Collects vertices and arcs by external id, validating on `build`.
#[derive(Debug)]
pub struct RoadGraphBuilder<T> {
    vehicle_types: Vec<String>,
    vertices: Vec<(u64, Option<(T, T)>)>,
    arcs: Vec<(u64, u64, T, Vec<TravelTimeFunction<T>>)>,
}

impl<T: Scalar> RoadGraphBuilder<T> {
    pub fn new(vehicle_types: Vec<String>) -> Self {
        Self {
            vehicle_types,
            vertices: Vec::new(),
            arcs: Vec::new(),
        }
    }

    pub fn vertex(&mut self, id: u64, coords: Option<(T, T)>) -> &mut Self {
        self.vertices.push((id, coords));
        self
    }

    pub fn arc(
        &mut self,
        tail: u64,
        head: u64,
        length: T,
        ttf: Vec<TravelTimeFunction<T>>,
    ) -> &mut Self {
        self.arcs.push((tail, head, length, ttf));
        self
    }

    pub fn build(self) -> Result<RoadGraph<T>, MetricError> {
        let mut vertices = self.vertices;
        vertices.sort_by_key(|v| v.0);
        for w in vertices.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(MetricError::DuplicateVertex(w[0].0));
            }
        }
        let index: HashMap<u64, usize> =
            vertices.iter().enumerate().map(|(i, v)| (v.0, i)).collect();
        let n = vertices.len();
        let mut out_arcs = vec![Vec::new(); n];
        let mut in_arcs = vec![Vec::new(); n];
        let mut arcs = Vec::with_capacity(self.arcs.len());
        for (id, (tail, head, length, ttf)) in self.arcs.into_iter().enumerate() {
            let t = *index.get(&tail).ok_or(MetricError::DanglingArc {
                arc: id,
                vertex: tail,
            })?;
            let h = *index.get(&head).ok_or(MetricError::DanglingArc {
                arc: id,
                vertex: head,
            })?;
            if !(length > T::zero()) {
                return Err(MetricError::NonPositiveLength { arc: id });
            }
            if ttf.len() != self.vehicle_types.len() {
                return Err(MetricError::MissingTtf {
                    arc: id,
                    vehicle_type: format!("{} of {}", ttf.len(), self.vehicle_types.len()),
                });
            }
            out_arcs[t].push(id);
            in_arcs[h].push(id);
            arcs.push(RoadArc {
                tail: t,
                head: h,
                length,
                ttf,
            });
        }
        Ok(RoadGraph {
            vehicle_types: self.vehicle_types,
            external_ids: vertices.iter().map(|v| v.0).collect(),
            coords: vertices.iter().map(|v| v.1).collect(),
            arcs,
            out_arcs,
            in_arcs,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GraphFile {
    pub vertices: Vec<VertexRecord>,
    pub arcs: Vec<ArcRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VertexRecord {
    pub id: u64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ArcRecord {
    pub tail: u64,
    pub head: u64,
    pub length_m: f64,
    pub ttf: BTreeMap<String, TtfRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TtfRecord {
    pub period_s: f64,
    pub breakpoints: Vec<[f64; 2]>,
}
