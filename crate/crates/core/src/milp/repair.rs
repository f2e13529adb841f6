use serde::{Deserialize, Serialize};

use super::model::{Constraint, MilpModel, Sense};
use super::oracle::{solve_exact_tiny, TinySolution};
use super::scalarize::ScalarizedPdGraph;
use super::MilpError;
use crate::metric::{LegTag, Router};
use crate::pd::{NodeKind, Route, Violation, ViolationKind};

/// One worker's subtour as PD node indices, optionally with leg variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtourInput {
    pub worker: u64,
    pub nodes: Vec<usize>,
    /// Variant per leg; when absent every leg follows the run's metric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variants: Option<Vec<usize>>,
}

/// Subtours of all used workers.
pub type CandidateSolution = Vec<SubtourInput>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepairStatus {
    Feasible,
    Repaired,
    Rejected,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubtourReport {
    pub worker: u64,
    pub nodes: Vec<usize>,
    pub original_tags: Vec<LegTag>,
    pub tags: Vec<LegTag>,
    pub arrivals: Vec<f64>,
    /// Leg indices switched to time-optimal, in the order applied.
    pub swaps: Vec<usize>,
    /// Violations left after repair.
    pub violations: Vec<Violation>,
    pub status: RepairStatus,
    pub cost: f64,
    #[serde(skip)]
    pub route: Route,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionCheckReport {
    pub subtours: Vec<SubtourReport>,
    /// One no-good row per rejected subtour.
    pub cuts: Vec<Constraint>,
    pub feasible: bool,
    /// Realized route costs minus the profit of served requests.
    pub objective: f64,
}

fn validate(sg: &ScalarizedPdGraph, input: &SubtourInput) -> Result<usize, MilpError> {
    let bad = |msg: String| Err(MilpError::BadSubtour(msg));
    let Some(w) = sg.workers.iter().position(|w| w.id == input.worker) else {
        return bad(format!("unknown worker {}", input.worker));
    };
    let pd = &sg.pd;
    let nodes = &input.nodes;
    if nodes.len() < 2 || nodes[0] != pd.start(w) || nodes[nodes.len() - 1] != pd.end(w) {
        return bad(format!(
            "worker {} subtour must run from node {} to node {}",
            input.worker,
            pd.start(w),
            pd.end(w)
        ));
    }
    if let Some(&v) = nodes.iter().find(|&&v| v >= pd.nodes.len()) {
        return bad(format!("unknown node {v}"));
    }
    for pair in nodes.windows(2) {
        if pd.arc_index(pair[0], pair[1]).is_none() {
            return bad(format!("no PD arc {} -> {}", pair[0], pair[1]));
        }
    }
    if let Some(vs) = &input.variants {
        if vs.len() + 1 != nodes.len() || vs.iter().any(|&k| k >= sg.variants()) {
            return bad(format!(
                "worker {}: one valid variant per leg expected",
                input.worker
            ));
        }
    }
    Ok(w)
}

fn initial_tags(sg: &ScalarizedPdGraph, input: &SubtourInput, w: usize) -> Vec<LegTag> {
    input
        .nodes
        .windows(2)
        .enumerate()
        .map(|(k, pair)| {
            let variant = input.variants.as_ref().map(|vs| vs[k]);
            let tag = variant.and_then(|x| sg.arc_for(pair[0], pair[1], w).map(|a| a.legs[x].tag));
            tag.unwrap_or(sg.metric.leg_tag())
        })
        .collect()
}

fn structural(v: &Violation) -> bool {
    matches!(
        v.kind,
        ViolationKind::Capacity { .. } | ViolationKind::Precedence { .. }
    )
}

/// Relabels one subtour under the time-dependent metric and, on a deadline
/// violation, switches distance-optimal legs to time-optimal ones backwards
/// from the violating node, nearest first, until it clears.
pub fn check_subtour(
    sg: &ScalarizedPdGraph,
    router: &Router,
    input: &SubtourInput,
) -> Result<SubtourReport, MilpError> {
    let w = validate(sg, input)?;
    let worker = &sg.workers[w];
    let nodes = input.nodes.iter().map(|&v| sg.nodes[v].clone()).collect();
    let original_tags = initial_tags(sg, input, w);
    let mut route = Route::realize(
        worker.id,
        sg.vehicles[w],
        worker.capacity,
        nodes,
        original_tags.clone(),
        router,
    )?;
    let mut swaps = Vec::new();
    let mut violations = route.check_feasible();
    while let Some(first) = violations.iter().min_by_key(|v| v.index) {
        if violations.iter().any(structural) {
            break;
        }
        let Some(k) = (0..first.index)
            .rev()
            .find(|&k| route.tags[k] == LegTag::DistanceOptimal)
        else {
            break;
        };
        route.tags[k] = LegTag::TimeOptimal;
        route.relabel_from(router, k + 1)?;
        swaps.push(k);
        violations = route.check_feasible();
    }
    let status = match (violations.is_empty(), swaps.is_empty()) {
        (false, _) => RepairStatus::Rejected,
        (true, true) => RepairStatus::Feasible,
        (true, false) => RepairStatus::Repaired,
    };
    Ok(SubtourReport {
        worker: worker.id,
        nodes: input.nodes.clone(),
        original_tags,
        tags: route.tags.clone(),
        arrivals: route.labels.iter().map(|l| l.arrive).collect(),
        swaps,
        violations,
        status,
        cost: route.cost(sg.metric),
        route,
    })
}

/// No-good row forbidding every variant combination of the subtour's arcs.
fn no_good_cut(
    sg: &ScalarizedPdGraph,
    model: &MilpModel,
    w: usize,
    nodes: &[usize],
    n: usize,
) -> Constraint {
    let arcs: Vec<usize> = nodes
        .windows(2)
        .map(|p| sg.pd.arc_index(p[0], p[1]).expect("validated arc"))
        .collect();
    let terms = model
        .arc_vars
        .iter()
        .filter(|a| a.worker == w && arcs.contains(&a.pd_arc))
        .map(|a| (a.var, 1.0))
        .collect();
    Constraint {
        name: format!("cut{n}_w{}", sg.workers[w].id),
        terms,
        sense: Sense::Le,
        rhs: arcs.len() as f64 - 1.0,
    }
}

/// Checks and repairs every subtour of a solution. Cuts are numbered from
/// `first_cut`.
pub fn check_and_repair(
    sg: &ScalarizedPdGraph,
    model: &MilpModel,
    router: &Router,
    solution: &[SubtourInput],
    first_cut: usize,
) -> Result<SolutionCheckReport, MilpError> {
    let mut seen = Vec::new();
    let mut subtours = Vec::new();
    let mut cuts = Vec::new();
    let mut objective = 0.0;
    for input in solution {
        if seen.contains(&input.worker) {
            return Err(MilpError::BadSubtour(format!(
                "worker {} appears twice",
                input.worker
            )));
        }
        seen.push(input.worker);
        let report = check_subtour(sg, router, input)?;
        if report.status == RepairStatus::Rejected {
            let w = sg.worker_index(input.worker);
            cuts.push(no_good_cut(
                sg,
                model,
                w,
                &input.nodes,
                first_cut + cuts.len(),
            ));
        }
        let served = input
            .nodes
            .iter()
            .filter(|&&v| sg.nodes[v].kind == NodeKind::Pickup)
            .count();
        objective += report.cost - model.sigma * served as f64;
        subtours.push(report);
    }
    let mut owners: Vec<u64> = solution
        .iter()
        .flat_map(|s| s.nodes.iter())
        .filter(|&&v| sg.nodes[v].kind == NodeKind::Pickup)
        .map(|&v| sg.nodes[v].owner)
        .collect();
    owners.sort_unstable();
    if owners.windows(2).any(|p| p[0] == p[1]) {
        return Err(MilpError::BadSubtour("a request is served twice".into()));
    }
    Ok(SolutionCheckReport {
        feasible: cuts.is_empty(),
        subtours,
        cuts,
        objective,
    })
}

/// Subtours of the used workers in an oracle solution.
pub fn oracle_subtours(sg: &ScalarizedPdGraph, solution: &TinySolution) -> CandidateSolution {
    solution
        .routes
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_idle())
        .map(|(w, r)| SubtourInput {
            worker: sg.workers[w].id,
            nodes: r.nodes.clone(),
            variants: Some(r.variants.clone()),
        })
        .collect()
}

/// Result of the solve, check and cut loop.
#[derive(Debug, Clone, Serialize)]
pub struct RepairRun {
    pub solution: TinySolution,
    pub report: SolutionCheckReport,
    /// Every cut added before the accepted solution.
    pub cuts: Vec<Constraint>,
    pub rounds: usize,
}

/// Solves with the exact oracle, rejects subtours infeasible under the
/// time-dependent metric, forbids them, and re-solves.
pub fn solve_and_repair(
    sg: &ScalarizedPdGraph,
    model: &MilpModel,
    router: &Router,
    max_rounds: usize,
) -> Result<RepairRun, MilpError> {
    let mut forbidden: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut cuts = Vec::new();
    for round in 1..=max_rounds {
        let solution = solve_exact_tiny(sg, model, &forbidden)?;
        let report = check_and_repair(
            sg,
            model,
            router,
            &oracle_subtours(sg, &solution),
            cuts.len(),
        )?;
        if report.feasible {
            return Ok(RepairRun {
                solution,
                report,
                cuts,
                rounds: round,
            });
        }
        for s in report
            .subtours
            .iter()
            .filter(|s| s.status == RepairStatus::Rejected)
        {
            forbidden.push((sg.worker_index(s.worker), s.nodes.clone()));
        }
        cuts.extend(report.cuts);
    }
    Err(MilpError::Exhausted(max_rounds))
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateChoice {
    pub index: usize,
    pub report: SolutionCheckReport,
}

/// Checks each candidate and keeps the feasible one with the lowest realized
/// objective; ties go to the earlier candidate.
pub fn best_candidate(
    sg: &ScalarizedPdGraph,
    model: &MilpModel,
    router: &Router,
    candidates: &[CandidateSolution],
) -> Result<Option<CandidateChoice>, MilpError> {
    let mut best: Option<CandidateChoice> = None;
    for (index, c) in candidates.iter().enumerate() {
        let report = check_and_repair(sg, model, router, c, 0)?;
        if report.feasible
            && best
                .as_ref()
                .is_none_or(|b| report.objective < b.report.objective - crate::pd::TOL)
        {
            best = Some(CandidateChoice { index, report });
        }
    }
    Ok(best)
}
