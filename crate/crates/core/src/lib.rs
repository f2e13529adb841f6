//! Online pickup-and-delivery scheduling over road networks with
//! time-dependent travel times.
//!
//! Layers, bottom up: [`metric`] (travel-time functions, road graph, queries),
//! [`pd`] (requests, workers, labeled routes), [`insertion`] (scoring,
//! pruning, workload balancing, relocation), [`prophet`] (forecast-aware
//! insertion), [`milp`] (static relaxation, LP emission, exact tiny oracle,
//! repair), [`forecast`] (grid-merged demand forecasts) and [`sim`]
//! (generation, replay, metrics).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod forecast;
pub mod insertion;
pub mod metric;
pub mod milp;
pub mod pd;
pub mod prophet;
pub mod scalar;
pub mod sim;

pub use metric::{LegPlan, LegTag, MetricError, RoadGraph, Router, TravelTimeFunction};

/// Road graph over `f64` seconds and meters.
pub type Graph = RoadGraph<f64>;
/// Travel-time function over `f64` seconds.
pub type Ttf = TravelTimeFunction<f64>;

#[cfg(test)]
pub(crate) mod toy;
