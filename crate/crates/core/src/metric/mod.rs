//! Road network, time-dependent travel times and point-to-point queries.

mod graph;
mod query;
mod router;
mod ttf;

use thiserror::Error;

pub use graph::{
    ArcId, ArcRecord, GraphFile, RoadArc, RoadGraph, RoadGraphBuilder, TtfRecord, VertexId,
    VertexRecord,
};
pub use query::{
    compose_arcs, compose_arrival, earliest_arrival, extract_path, shortest_distance,
    snap_to_graph, ArrivalLabel, DistanceLabel,
};
pub use router::{LegPlan, LegTag, Router};
pub use ttf::{evaluate_ttf, TravelTimeFunction, TtfError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("graph file: {0}")]
    Parse(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(u64),
    #[error("unknown vehicle type {0}")]
    UnknownVehicleType(String),
    #[error("arc {arc} references undeclared vertex {vertex}")]
    DanglingArc { arc: usize, vertex: u64 },
    #[error("arc {arc} has non-positive length")]
    NonPositiveLength { arc: usize },
    #[error("arc {arc} lacks a travel-time function for vehicle type {vehicle_type}")]
    MissingTtf { arc: usize, vehicle_type: String },
    #[error("arc {arc} ({tail}->{head}), vehicle type {vehicle_type}: {source}")]
    BadTtf {
        arc: usize,
        tail: u64,
        head: u64,
        vehicle_type: String,
        source: TtfError,
    },
    #[error("path is not connected between positions {at} and {next}", next = .at + 1)]
    InvalidPath { at: usize },
    #[error("graph has no vertex coordinates")]
    NoCoordinates,
}
