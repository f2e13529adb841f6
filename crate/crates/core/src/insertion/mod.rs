//! Insertion-based online assignment with pruning, workload balancing and
//! request relocation.

mod candidate;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::metric::{LegTag, MetricError, RoadGraph, Router};
use crate::pd::{
    request_nodes, worker_nodes, Metric, NodeKind, PdError, PdNode, Request, Route, Worker, TOL,
};

pub use candidate::{
    compute_indicators, release_gate, try_insert, CandidateStatus, CheckIndicators, IndicatorError,
    InsertContext, InsertionCandidate,
};
pub(crate) use candidate::{norm_cost, suffix_lower_bounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WbParams {
    pub theta: f64,
    pub mu: f64,
}

impl Default for WbParams {
    fn default() -> Self {
        Self {
            theta: 1.5,
            mu: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub metric: Metric,
    pub norm: Norm,
    pub wb: Option<WbParams>,
    pub rr: bool,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            metric: Metric::Time,
            norm: Norm::L1,
            wb: None,
            rr: false,
        }
    }
}

/// A request with its service nodes snapped to the road graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub request: Request,
    pub pickup: PdNode,
    pub delivery: PdNode,
}

impl Job {
    pub fn new(g: &RoadGraph<f64>, request: Request) -> Result<Self, MetricError> {
        let (pickup, delivery) = request_nodes(g, &request)?;
        Ok(Self {
            request,
            pickup,
            delivery,
        })
    }

    pub fn id(&self) -> u64 {
        self.request.id
    }
}

/// The penalized score `(1 + mu * [L_w > theta * mean L]) * raw`, where `L`
/// is route length over workers operational at `now`.
pub fn apply_wb(
    raw: f64,
    worker: usize,
    routes: &[Route],
    workers: &[Worker],
    now: f64,
    wb: WbParams,
) -> f64 {
    raw * wb_multiplier(worker, routes, workers, now, wb)
}

pub fn wb_multiplier(
    worker: usize,
    routes: &[Route],
    workers: &[Worker],
    now: f64,
    wb: WbParams,
) -> f64 {
    let operational: Vec<usize> = (0..workers.len())
        .filter(|&w| workers[w].operational(now))
        .collect();
    if operational.is_empty() || !operational.contains(&worker) {
        return 1.0;
    }
    let total: f64 = operational.iter().map(|&w| routes[w].length()).sum();
    let avg = total / operational.len() as f64;
    if routes[worker].length() > wb.theta * avg {
        1.0 + wb.mu
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "decision", rename_all = "lowercase")]
pub enum Decision {
    Assigned {
        worker: u64,
        i: usize,
        j: usize,
        score: f64,
        /// Accepted only after rebuilding the detour legs time-optimal.
        contingency: bool,
    },
    Rejected,
}

impl Decision {
    pub fn worker(&self) -> Option<u64> {
        match self {
            Decision::Assigned { worker, .. } => Some(*worker),
            Decision::Rejected => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Relocation {
    pub request: u64,
    pub from: u64,
    pub to: u64,
    pub objective_before: f64,
    pub objective_after: f64,
}

/// Options for a search over all `(w, i, j)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SearchOptions {
    pub now: f64,
    /// Time at which operational workers are counted for balancing.
    pub wb_now: f64,
    pub detour: LegTag,
    pub wb: Option<WbParams>,
    pub ignore_below: Option<f64>,
}

impl SearchOptions {
    pub fn at(now: f64, metric: Metric, wb: Option<WbParams>) -> Self {
        Self {
            now,
            wb_now: now,
            detour: metric.leg_tag(),
            wb,
            ignore_below: None,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Best {
    pub worker: usize,
    pub candidate: InsertionCandidate,
}

/// Fleet state plus the insertion scheduler operating on it.
#[derive(Debug)]
pub struct Scheduler {
    pub(crate) router: Arc<Router>,
    pub config: SchedulerConfig,
    pub(crate) workers: Vec<Worker>,
    pub(crate) routes: Vec<Route>,
    vehicle_names: Vec<String>,
    pub(crate) jobs: BTreeMap<u64, Job>,
    probes: u64,
}

impl Scheduler {
    pub fn new(
        router: Arc<Router>,
        mut workers: Vec<Worker>,
        config: SchedulerConfig,
    ) -> Result<Self, PdError> {
        workers.sort_by_key(|w| w.id);
        let g = router.graph();
        let mut routes = Vec::with_capacity(workers.len());
        let mut vehicle_names = Vec::with_capacity(workers.len());
        for w in &workers {
            let vehicle = w.vehicle_index(g)?;
            vehicle_names.push(g.vehicle_types()[vehicle].clone());
            let (s, e) = worker_nodes(g, w)?;
            routes.push(Route::with_metric(
                w.id,
                vehicle,
                w.capacity,
                vec![s, e],
                config.metric,
                &router,
            )?);
        }
        Ok(Self {
            router,
            config,
            workers,
            routes,
            vehicle_names,
            jobs: BTreeMap::new(),
            probes: 0,
        })
    }

    pub fn router(&self) -> &Router {
        &self.router
    }

    pub fn workers(&self) -> &[Worker] {
        &self.workers
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn route_of(&self, worker: u64) -> Option<&Route> {
        self.routes.iter().find(|r| r.worker == worker)
    }

    pub fn job(&self, id: u64) -> Option<&Job> {
        self.jobs.get(&id)
    }

    /// Number of candidates that reached a full suffix relabel.
    pub fn probes(&self) -> u64 {
        self.probes
    }

    pub fn make_job(&self, request: Request) -> Result<Job, MetricError> {
        Job::new(self.router.graph(), request)
    }

    /// Global objective: sum over workers of `Cost^nu` under the configured metric.
    pub fn objective(&self) -> f64 {
        self.routes
            .iter()
            .map(|r| norm_cost(r.cost(self.config.metric), self.config.norm))
            .sum()
    }

    /// Worker holding request `id`, as an index.
    pub fn holder(&self, id: u64) -> Option<usize> {
        self.routes
            .iter()
            .position(|r| r.position(NodeKind::Pickup, id).is_some())
    }

    /// Best insertion for `job` over all eligible workers; `None` if none is feasible.
    pub(crate) fn search(&mut self, job: &Job, opts: SearchOptions) -> Option<Best> {
        let mut best: Option<Best> = None;
        let mut incumbent = f64::INFINITY;
        for w in 0..self.routes.len() {
            if !job.request.eligible(&self.vehicle_names[w]) {
                continue;
            }
            let multiplier = opts.wb.map_or(1.0, |wb| {
                wb_multiplier(w, &self.routes, &self.workers, opts.wb_now, wb)
            });
            let route = &self.routes[w];
            let indicators = compute_indicators(route).ok();
            let suffix_lb = suffix_lower_bounds(route, self.config.metric, &self.router);
            let n = route.len();
            for i in 0..n - 1 {
                for j in i..n - 1 {
                    let ctx = InsertContext {
                        now: opts.now,
                        metric: self.config.metric,
                        norm: self.config.norm,
                        detour: opts.detour,
                        multiplier,
                        incumbent,
                        ignore_below: opts.ignore_below,
                    };
                    let cand = candidate::try_insert_with(
                        &self.router,
                        route,
                        indicators.as_ref(),
                        job,
                        i,
                        j,
                        &ctx,
                        &suffix_lb,
                    );
                    if cand.relabeled {
                        self.probes += 1;
                    }
                    match cand.status {
                        CandidateStatus::Gated | CandidateStatus::PrunedCapacity { .. } => break,
                        CandidateStatus::PrunedSlack { bulk: true } => break,
                        CandidateStatus::Feasible if cand.score < incumbent - TOL => {
                            incumbent = cand.score;
                            best = Some(Best {
                                worker: w,
                                candidate: cand,
                            });
                        }
                        _ => {}
                    }
                }
            }
        }
        best
    }

    /// Search with the distance-metric contingency: when no candidate is
    /// feasible under distance-optimal detours, retry with time-optimal ones.
    pub(crate) fn search_with_contingency(
        &mut self,
        job: &Job,
        mut opts: SearchOptions,
    ) -> Option<(Best, bool)> {
        if let Some(b) = self.search(job, opts) {
            return Some((b, false));
        }
        if self.config.metric == Metric::Distance {
            opts.detour = LegTag::TimeOptimal;
            return self.search(job, opts).map(|b| (b, true));
        }
        None
    }

    pub(crate) fn commit(&mut self, job: Job, best: Best, contingency: bool) -> Decision {
        let Best { worker, candidate } = best;
        let decision = Decision::Assigned {
            worker: self.routes[worker].worker,
            i: candidate.i,
            j: candidate.j,
            score: candidate.score,
            contingency,
        };
        self.routes[worker] = candidate
            .route
            .expect("feasible candidate carries its route");
        self.jobs.insert(job.id(), job);
        decision
    }

    /// Assigns `job` at time `now`, or rejects it.
    pub fn assign_request(&mut self, job: Job, now: f64) -> Decision {
        match self.search_with_contingency(
            &job,
            SearchOptions::at(now, self.config.metric, self.config.wb),
        ) {
            Some((best, contingency)) => self.commit(job, best, contingency),
            None => Decision::Rejected,
        }
    }

    /// Whether the worker at index `w` has not yet left the node before `r`'s pickup.
    pub fn relocatable(&self, w: usize, r: u64, now: f64) -> bool {
        let route = &self.routes[w];
        match route.position(NodeKind::Pickup, r) {
            Some(k) => !route.nodes()[k].is_virtual && route.labels()[k - 1].depart >= now - TOL,
            None => false,
        }
    }

    /// One relocation sweep over every not-yet-picked-up real request.
    /// A move is kept only if the global objective drops by more than the
    /// tolerance; otherwise the previous routes are restored.
    pub fn relocate_requests(&mut self, now: f64) -> Vec<Relocation> {
        let mut moves = Vec::new();
        for w in 0..self.routes.len() {
            let ids: Vec<u64> = self.routes[w].requests().collect();
            for r in ids {
                if !self.relocatable(w, r, now) {
                    continue;
                }
                let Some(job) = self.jobs.get(&r).cloned() else {
                    continue;
                };
                let before = self.objective();
                let saved = self.routes.clone();
                let Ok(Some(short)) = self.routes[w].remove_request(r, &self.router) else {
                    continue;
                };
                self.routes[w] = short;
                match self.search_with_contingency(
                    &job,
                    SearchOptions::at(now, self.config.metric, self.config.wb),
                ) {
                    Some((best, _)) => {
                        let to = best.worker;
                        let route = best
                            .candidate
                            .route
                            .expect("feasible candidate carries its route");
                        self.routes[to] = route;
                        let after = self.objective();
                        if after < before - TOL {
                            moves.push(Relocation {
                                request: r,
                                from: self.routes[w].worker,
                                to: self.routes[to].worker,
                                objective_before: before,
                                objective_after: after,
                            });
                        } else {
                            self.routes = saved;
                        }
                    }
                    None => self.routes = saved,
                }
            }
        }
        moves
    }

    pub(crate) fn vehicle_name(&self, w: usize) -> &str {
        &self.vehicle_names[w]
    }
}
