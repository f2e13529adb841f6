//! Static relaxation of the online problem: scalar travel-time estimates over
//! the PD graph, a mixed-integer model with LP-format emission, an exact
//! enumeration oracle for tiny instances, and re-checking of solutions under
//! the time-dependent metric with leg repair and no-good cuts.

use thiserror::Error;

use crate::metric::MetricError;
use crate::pd::RouteError;

mod lp;
mod model;
mod oracle;
mod repair;
mod scalarize;

pub use lp::{emit_lp, format_row, parse_lp};
pub use model::{
    build_milp, model_arc_id, ArcVar, Constraint, LinearProgram, MilpModel, Sense, VarKind,
    Variable,
};
pub use oracle::{
    assignment, solve_exact_tiny, ScalarRoute, TinySolution, MAX_TINY_REQUESTS, MAX_TINY_WORKERS,
};
pub use repair::{
    best_candidate, check_and_repair, check_subtour, oracle_subtours, solve_and_repair,
    CandidateChoice, CandidateSolution, RepairRun, RepairStatus, SolutionCheckReport, SubtourInput,
    SubtourReport,
};
pub use scalarize::{scalarize, DroppedArc, LegEstimate, ScalarArc, ScalarizedPdGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MilpError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error("LP text: {0}")]
    Lp(String),
    #[error(
        "instance has {requests} requests and {workers} workers; the exact oracle is limited to \
         {MAX_TINY_REQUESTS} requests and {MAX_TINY_WORKERS} workers"
    )]
    TooLarge { requests: usize, workers: usize },
    #[error("bad subtour: {0}")]
    BadSubtour(String),
    #[error("no feasible solution after {0} re-solve rounds")]
    Exhausted(usize),
}
