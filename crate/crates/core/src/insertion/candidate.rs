use thiserror::Error;

use super::{Job, Norm};
use crate::metric::{LegTag, Router};
use crate::pd::route::{advance, node_label};
use crate::pd::{Label, Leg, Metric, NodeKind, PdNode, Route, TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndicatorError {
    #[error("indicators are undefined for an infeasible route (worker {0})")]
    InfeasibleRoute(u64),
}

/// Per-node detour tolerances computed backwards along a labeled route.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckIndicators {
    /// Largest tolerable arrival delay at the node after each position.
    pub slack: Vec<f64>,
    /// Latest admissible arrival at each node.
    pub ddl: Vec<f64>,
}

/// Backward pass computing `ddl` and `slack`.
///
/// Each leg contributes its congestion gap (travel time above the free-flow
/// bound) so the bounds stay valid when a later departure meets lighter
/// traffic; with constant travel times every gap is zero.
pub fn compute_indicators(route: &Route) -> Result<CheckIndicators, IndicatorError> {
    if !route.is_feasible() {
        return Err(IndicatorError::InfeasibleRoute(route.worker));
    }
    let nodes = route.nodes();
    let labels = route.labels();
    let legs = route.legs();
    let n = nodes.len();

    // prefix[k] = sum over m < k of the pickup-deadline term of leg m
    let mut prefix = vec![0.0; n];
    for m in 0..n - 1 {
        let term = (labels[m + 1].arrive - labels[m].depart) - legs[m].gap + nodes[m].service
            - labels[m].wait;
        prefix[m + 1] = prefix[m] + term;
    }

    let mut ddl = vec![f64::INFINITY; n];
    for (k, node) in nodes.iter().enumerate() {
        ddl[k] = match node.kind {
            NodeKind::ShiftEnd | NodeKind::Delivery => node.deadline,
            NodeKind::Pickup => match route.position(NodeKind::Delivery, node.owner) {
                Some(j) if nodes[j].deadline.is_finite() => {
                    nodes[j].deadline - (prefix[j] - prefix[k])
                }
                _ => f64::INFINITY,
            },
            NodeKind::ShiftStart => f64::INFINITY,
        };
    }

    let mut slack = vec![f64::INFINITY; n];
    for k in (0..n - 1).rev() {
        let next = k + 1;
        let carried = if next + 1 < n {
            slack[next] + labels[next].wait + legs[next].gap
        } else {
            f64::INFINITY
        };
        slack[k] = (ddl[next] - labels[next].arrive).min(carried);
    }
    Ok(CheckIndicators { slack, ddl })
}

/// Scoring and gating parameters for one candidate evaluation.
#[derive(Debug, Clone, Copy)]
pub struct InsertContext {
    pub now: f64,
    pub metric: Metric,
    pub norm: Norm,
    /// Tag for legs touching the new request's nodes.
    pub detour: LegTag,
    /// Workload-balancer multiplier for this worker.
    pub multiplier: f64,
    /// Best score found so far; candidates that cannot beat it are abandoned.
    pub incumbent: f64,
    /// Virtual pickups below this probability between the new nodes are dropped.
    pub ignore_below: Option<f64>,
}

impl InsertContext {
    pub fn new(now: f64, metric: Metric, norm: Norm) -> Self {
        Self {
            now,
            metric,
            norm,
            detour: metric.leg_tag(),
            multiplier: 1.0,
            incumbent: f64::INFINITY,
            ignore_below: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateStatus {
    /// Position precedes a node the worker already left.
    Gated,
    /// Load after the new pickup exceeds capacity; `bulk` covers every later delivery position.
    PrunedCapacity {
        bulk: bool,
    },
    /// Arrival delay at the next node exceeds its slack; `bulk` as above.
    PrunedSlack {
        bulk: bool,
    },
    Infeasible,
    /// Relabel stopped once the score provably reached the incumbent.
    Abandoned,
    Feasible,
}

#[derive(Debug, Clone)]
pub struct InsertionCandidate {
    pub worker: u64,
    pub i: usize,
    pub j: usize,
    pub score: f64,
    pub status: CandidateStatus,
    /// Whether the suffix was relabeled, the expensive step pruning avoids.
    pub relabeled: bool,
    pub route: Option<Route>,
    /// Virtual requests whose pickups this candidate drops.
    pub ignored: Vec<u64>,
}

impl InsertionCandidate {
    fn rejected(route: &Route, i: usize, j: usize, status: CandidateStatus) -> Self {
        Self {
            worker: route.worker,
            i,
            j,
            score: f64::INFINITY,
            status,
            relabeled: false,
            route: None,
            ignored: Vec::new(),
        }
    }
}

pub(crate) fn norm_cost(c: f64, norm: Norm) -> f64 {
    match norm {
        Norm::L1 => c,
        Norm::L2 => c * c,
    }
}

/// Lower bound on the summed cost of legs `k..` when kept with their tags.
pub(crate) fn suffix_lower_bounds(route: &Route, metric: Metric, router: &Router) -> Vec<f64> {
    let legs = route.legs();
    let nodes = route.nodes();
    let mut out = vec![0.0; legs.len() + 1];
    for k in (0..legs.len()).rev() {
        let lb = match metric {
            Metric::Time => (legs[k].travel_time() - legs[k].gap).max(0.0),
            Metric::Distance => match legs[k].tag {
                LegTag::DistanceOptimal => legs[k].length,
                LegTag::TimeOptimal => router
                    .distance(nodes[k].vertex, nodes[k + 1].vertex)
                    .unwrap_or(0.0),
            },
        };
        out[k] = out[k + 1] + lb;
    }
    out
}

/// Gate on position `i`: the worker has not yet left `v_i`, or is idle with
/// only the shift end ahead.
pub fn release_gate(route: &Route, i: usize, now: f64) -> bool {
    route.labels()[i].depart >= now - TOL || i + 2 == route.len()
}

/// A candidate node sequence with the bookkeeping to relabel it lazily.
pub(crate) struct Layout {
    pub nodes: Vec<PdNode>,
    pub tags: Vec<LegTag>,
    /// First new index whose label differs from the base route.
    pub first: usize,
    /// New index of the first unchanged node after the delivery.
    pub tail_start: usize,
    /// `new index - old index` for nodes from `tail_start` on.
    pub offset: isize,
    pub ignored: Vec<u64>,
}

fn ignorable(node: &PdNode, below: Option<f64>) -> bool {
    matches!(below, Some(t) if node.kind == NodeKind::Pickup && node.is_virtual && node.probability < t)
}

/// Lays out `route` with `job`'s pickup after `v_i` and delivery after `v_j`.
pub(crate) fn layout(route: &Route, job: &Job, i: usize, j: usize, ctx: &InsertContext) -> Layout {
    let old = route.nodes();
    let old_tags = route.tags();
    let mut nodes = Vec::with_capacity(old.len() + 2);
    let mut tags = Vec::with_capacity(old.len() + 1);
    nodes.extend_from_slice(&old[..=i]);
    tags.extend_from_slice(&old_tags[..i]);
    let mut first = i + 1;
    if route.labels()[i].depart < ctx.now - TOL {
        nodes[i].hold = nodes[i].hold.max(ctx.now);
        first = i;
    }
    tags.push(ctx.detour);
    nodes.push(job.pickup.clone());
    let mut ignored = Vec::new();
    let mut prev_old: Option<usize> = None;
    for (k, node) in old.iter().enumerate().take(j + 1).skip(i + 1) {
        if ignorable(node, ctx.ignore_below) {
            ignored.push(node.owner);
            continue;
        }
        tags.push(match prev_old {
            None => ctx.detour,
            Some(p) => old_tags[p],
        });
        nodes.push(node.clone());
        prev_old = Some(k);
    }
    tags.push(ctx.detour);
    nodes.push(job.delivery.clone());
    tags.push(ctx.detour);
    let tail_start = nodes.len();
    nodes.extend_from_slice(&old[j + 1..]);
    tags.extend_from_slice(&old_tags[j + 1..]);
    let offset = tail_start as isize - (j + 1) as isize;
    Layout {
        nodes,
        tags,
        first,
        tail_start,
        offset,
        ignored,
    }
}

pub(crate) enum Labeled {
    Feasible(Route),
    Infeasible,
    Abandoned,
}

/// Early-exit controls for [`label_layout`].
pub(crate) struct Budget<'a> {
    pub metric: Metric,
    pub norm: Norm,
    pub multiplier: f64,
    pub incumbent: f64,
    pub old_cost: f64,
    pub suffix_lb: &'a [f64],
    /// Slack-based infeasibility cut on unchanged nodes.
    pub slack: Option<&'a [f64]>,
}

/// Labels `lay` against `base`, reusing base labels before `lay.first` and
/// the base suffix once the departure time and load at an unchanged node
/// coincide. The result equals a full relabel of the same sequence.
pub(crate) fn label_layout(
    router: &Router,
    base: &Route,
    lay: Layout,
    budget: Option<&Budget<'_>>,
) -> Labeled {
    let Layout {
        nodes,
        tags,
        first,
        tail_start,
        offset,
        ..
    } = lay;
    let n = nodes.len();
    let mut labels: Vec<Label> = base.labels()[..first].to_vec();
    let mut legs: Vec<Leg> = base.legs()[..first.saturating_sub(1)].to_vec();
    if first == 0 {
        labels.push(node_label(&nodes[0], nodes[0].ready, 0.0));
    }
    let mut partial: f64 = legs.iter().map(|l| leg_cost(l, Metric::Time, budget)).sum();
    let mut m = labels.len();
    while m < n {
        let Ok((leg, label)) = advance(
            router,
            base.vehicle,
            &nodes[m - 1],
            &labels[m - 1],
            tags[m - 1],
            &nodes[m],
        ) else {
            return Labeled::Infeasible;
        };
        partial += leg_cost(&leg, Metric::Time, budget);
        let node = &nodes[m];
        let late = matches!(node.kind, NodeKind::Delivery | NodeKind::ShiftEnd)
            && label.arrive > node.deadline + TOL;
        if late || label.load > base.capacity + TOL || label.load < -TOL {
            return Labeled::Infeasible;
        }
        legs.push(leg);
        labels.push(label);
        if m >= tail_start {
            let o = (m as isize - offset) as usize;
            let old = &base.labels()[o];
            if let Some(b) = budget {
                if let Some(slack) = b.slack {
                    if label.arrive - old.arrive > slack[o - 1] + TOL {
                        return Labeled::Infeasible;
                    }
                }
            }
            if label.depart == old.depart && label.load == old.load {
                legs.extend_from_slice(&base.legs()[o..]);
                labels.extend_from_slice(&base.labels()[o + 1..]);
                break;
            }
            if let Some(b) = budget {
                let bound = partial + b.suffix_lb[o];
                let score =
                    b.multiplier * (norm_cost(bound, b.norm) - norm_cost(b.old_cost, b.norm));
                if score >= b.incumbent - TOL {
                    return Labeled::Abandoned;
                }
            }
        }
        m += 1;
    }
    let route = Route {
        nodes,
        tags,
        labels,
        legs,
        ..base.clone_shell()
    };
    if route.is_feasible() {
        Labeled::Feasible(route)
    } else {
        Labeled::Infeasible
    }
}

fn leg_cost(leg: &Leg, fallback: Metric, budget: Option<&Budget<'_>>) -> f64 {
    match budget.map_or(fallback, |b| b.metric) {
        Metric::Time => leg.travel_time(),
        Metric::Distance => leg.length,
    }
}

/// Arrival at `v_{i+1}` when only the pickup (and, for `i == j`, the
/// delivery) is spliced in after `v_i`.
fn detour_arrival(
    router: &Router,
    route: &Route,
    job: &Job,
    i: usize,
    with_delivery: bool,
    ctx: &InsertContext,
) -> Option<f64> {
    let nodes = route.nodes();
    let mut from = nodes[i].clone();
    let mut label = route.labels()[i];
    if label.depart < ctx.now - TOL {
        from.hold = from.hold.max(ctx.now);
        label = node_label(&from, label.arrive, label.load - from.load_delta());
    }
    let mut chain = vec![&job.pickup];
    if with_delivery {
        chain.push(&job.delivery);
    }
    chain.push(&nodes[i + 1]);
    for next in chain {
        let (_, l) = advance(router, route.vehicle, &from, &label, ctx.detour, next).ok()?;
        from = next.clone();
        label = l;
    }
    Some(label.arrive)
}

/// Evaluates inserting `job` with pickup after `v_i` and delivery after `v_j`.
///
/// Pruned candidates are rejected without relabeling the suffix. When the
/// pickup-only detour is pruned with `i < j`, `bulk` reports that every
/// delivery position for this `i` is prunable too.
pub fn try_insert(
    router: &Router,
    route: &Route,
    indicators: Option<&CheckIndicators>,
    job: &Job,
    i: usize,
    j: usize,
    ctx: &InsertContext,
) -> InsertionCandidate {
    let suffix_lb = suffix_lower_bounds(route, ctx.metric, router);
    try_insert_with(router, route, indicators, job, i, j, ctx, &suffix_lb)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn try_insert_with(
    router: &Router,
    route: &Route,
    indicators: Option<&CheckIndicators>,
    job: &Job,
    i: usize,
    j: usize,
    ctx: &InsertContext,
    suffix_lb: &[f64],
) -> InsertionCandidate {
    assert!(
        i <= j && j + 2 <= route.len(),
        "candidate ({i}, {j}) out of range"
    );
    if !release_gate(route, i, ctx.now) {
        return InsertionCandidate::rejected(route, i, j, CandidateStatus::Gated);
    }
    let bulk = i < j;
    let q = job.pickup.load;
    if route.labels()[i].load + q > route.capacity + TOL {
        return InsertionCandidate::rejected(route, i, j, CandidateStatus::PrunedCapacity { bulk });
    }
    let lay = layout(route, job, i, j, ctx);
    let prune = lay.ignored.is_empty();
    let indicators = indicators.filter(|_| prune);
    if let Some(ind) = indicators {
        match detour_arrival(router, route, job, i, !bulk, ctx) {
            None => return InsertionCandidate::rejected(route, i, j, CandidateStatus::Infeasible),
            Some(a) if a - route.labels()[i + 1].arrive > ind.slack[i] + TOL => {
                return InsertionCandidate::rejected(
                    route,
                    i,
                    j,
                    CandidateStatus::PrunedSlack { bulk },
                )
            }
            Some(_) => {}
        }
    }
    let old_cost = route.cost(ctx.metric);
    let budget = Budget {
        metric: ctx.metric,
        norm: ctx.norm,
        multiplier: ctx.multiplier,
        incumbent: ctx.incumbent,
        old_cost,
        suffix_lb,
        slack: indicators.map(|ind| ind.slack.as_slice()),
    };
    let ignored = lay.ignored.clone();
    let mut out = InsertionCandidate::rejected(route, i, j, CandidateStatus::Infeasible);
    out.relabeled = true;
    out.ignored = ignored;
    match label_layout(router, route, lay, Some(&budget)) {
        Labeled::Infeasible => {}
        Labeled::Abandoned => out.status = CandidateStatus::Abandoned,
        Labeled::Feasible(new) => {
            let raw = norm_cost(new.cost(ctx.metric), ctx.norm) - norm_cost(old_cost, ctx.norm);
            out.score = ctx.multiplier * raw;
            out.status = CandidateStatus::Feasible;
            out.route = Some(new);
        }
    }
    out
}

impl Route {
    /// Copy of the per-worker constants with empty sequences.
    pub(crate) fn clone_shell(&self) -> Route {
        Route {
            worker: self.worker,
            vehicle: self.vehicle,
            capacity: self.capacity,
            nodes: Vec::new(),
            tags: Vec::new(),
            labels: Vec::new(),
            legs: Vec::new(),
        }
    }
}
