//! Forecast-aware insertion: virtual requests are pre-assigned with their
//! constraints switched off, bound to matching real requests when those
//! arrive, and shortcut out when they expire unverified.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::insertion::{Decision, Job, Scheduler, SearchOptions};
use crate::metric::{LegTag, MetricError};
use crate::pd::{Metric, NodeKind, PdNode, Request, Route, RouteError, TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProphetError {
    #[error("forecast {0} is already bound or closed")]
    DoubleBinding(u64),
    #[error("request id {0} collides with a forecast id")]
    IdCollision(u64),
    #[error("forecast {0} is not a virtual request")]
    NotVirtual(u64),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Route(#[from] RouteError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BindingStatus {
    Pending,
    Verified,
    Expired,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastBinding {
    pub forecast: u64,
    pub matched: Option<u64>,
    pub status: BindingStatus,
    #[serde(skip)]
    pickup_vertex: usize,
    #[serde(skip)]
    ep: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProphetConfig {
    /// Largest `|ep_real - ep_forecast|` that still verifies a forecast, seconds.
    pub match_window: f64,
    /// Probability below which a forecast delivery is dropped and its pickup ignorable.
    pub threshold: f64,
}

impl Default for ProphetConfig {
    fn default() -> Self {
        Self {
            match_window: 900.0,
            threshold: 0.8,
        }
    }
}

/// Result of handling one real request.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum Outcome {
    /// Bound to a pending forecast; its nodes now carry the real request.
    Verified { worker: u64, forecast: u64 },
    Inserted {
        decision: Decision,
        /// Low-probability forecasts whose pickups the chosen insertion skipped.
        dropped: Vec<u64>,
    },
}

impl Outcome {
    pub fn worker(&self) -> Option<u64> {
        match self {
            Outcome::Verified { worker, .. } => Some(*worker),
            Outcome::Inserted { decision, .. } => decision.worker(),
        }
    }
}

#[derive(Debug)]
pub struct Prophet {
    pub scheduler: Scheduler,
    pub config: ProphetConfig,
    bindings: BTreeMap<u64, ForecastBinding>,
}

impl Prophet {
    pub fn new(scheduler: Scheduler, config: ProphetConfig) -> Self {
        Self {
            scheduler,
            config,
            bindings: BTreeMap::new(),
        }
    }

    pub fn bindings(&self) -> impl Iterator<Item = &ForecastBinding> {
        self.bindings.values()
    }

    pub fn binding(&self, forecast: u64) -> Option<&ForecastBinding> {
        self.bindings.get(&forecast)
    }

    /// Pre-assigns `forecasts` in order with balancing on, then deactivates
    /// their load and deadline and drops low-probability deliveries.
    /// Returns the forecasts no worker could take.
    pub fn seed_forecasts(&mut self, forecasts: Vec<Request>) -> Result<Vec<u64>, ProphetError> {
        let s = &mut self.scheduler;
        let wb = Some(s.config.wb.unwrap_or_default());
        let mut unplaced = Vec::new();
        for f in forecasts {
            if !f.is_virtual {
                return Err(ProphetError::NotVirtual(f.id));
            }
            if self.bindings.contains_key(&f.id) || s.job(f.id).is_some() {
                return Err(ProphetError::IdCollision(f.id));
            }
            let job = s.make_job(f)?;
            let opts = SearchOptions {
                now: f64::NEG_INFINITY,
                wb_now: job.request.earliest_pickup_time,
                ..SearchOptions::at(0.0, s.config.metric, wb)
            };
            let status = match s.search_with_contingency(&job, opts) {
                Some((best, contingency)) => {
                    s.commit(job.clone(), best, contingency);
                    BindingStatus::Pending
                }
                None => {
                    unplaced.push(job.id());
                    BindingStatus::Dropped
                }
            };
            self.bindings.insert(
                job.id(),
                ForecastBinding {
                    forecast: job.id(),
                    matched: None,
                    status,
                    pickup_vertex: job.pickup.vertex,
                    ep: job.request.earliest_pickup_time,
                },
            );
        }
        let threshold = self.config.threshold;
        for w in 0..s.routes.len() {
            let mut route = s.routes[w].clone();
            let mut touched = false;
            for node in &mut route.nodes {
                if node.is_virtual {
                    node.load = 0.0;
                    node.deadline = f64::INFINITY;
                    touched = true;
                }
            }
            if !touched {
                continue;
            }
            route.relabel_from(s.router(), 1)?;
            let low = |n: &PdNode| {
                n.is_virtual && n.kind == NodeKind::Delivery && n.probability < threshold
            };
            if let Some(short) = route.remove_where(low, s.router())? {
                route = short;
            }
            s.routes[w] = route;
        }
        for job in s.jobs.values_mut().filter(|j| j.request.is_virtual) {
            job.request.load = 0.0;
            job.request.latest_delivery_time = f64::INFINITY;
            for node in [&mut job.pickup, &mut job.delivery] {
                node.load = 0.0;
                node.deadline = f64::INFINITY;
            }
        }
        Ok(unplaced)
    }

    /// Verifies a pending forecast with `job` if one matches, otherwise
    /// inserts it while ignoring in-range low-probability virtual pickups.
    pub fn handle(&mut self, job: Job, now: f64) -> Result<Outcome, ProphetError> {
        if self.bindings.contains_key(&job.id()) {
            return Err(ProphetError::IdCollision(job.id()));
        }
        for forecast in self.candidates(&job) {
            if let Some(worker) = self.try_bind(forecast, &job, now)? {
                return Ok(Outcome::Verified { worker, forecast });
            }
        }
        Ok(self.handle_real_request(job, now))
    }

    /// Insertion with the in-range ignore rule; committed routes omit the ignored pickups.
    pub fn handle_real_request(&mut self, job: Job, now: f64) -> Outcome {
        let s = &mut self.scheduler;
        let opts = SearchOptions {
            ignore_below: Some(self.config.threshold),
            ..SearchOptions::at(now, s.config.metric, s.config.wb)
        };
        let Some((best, contingency)) = s.search_with_contingency(&job, opts) else {
            return Outcome::Inserted {
                decision: Decision::Rejected,
                dropped: Vec::new(),
            };
        };
        let dropped = best.candidate.ignored.clone();
        let decision = s.commit(job, best, contingency);
        for id in &dropped {
            s.jobs.remove(id);
            if let Some(b) = self.bindings.get_mut(id) {
                b.status = BindingStatus::Dropped;
            }
        }
        Outcome::Inserted { decision, dropped }
    }

    /// Pending forecasts `job` may verify, nearest `ep` first, then by id.
    fn candidates(&self, job: &Job) -> Vec<u64> {
        let ep = job.request.earliest_pickup_time;
        let mut out: Vec<(f64, u64)> = self
            .bindings
            .values()
            .filter(|b| b.status == BindingStatus::Pending)
            .filter(|b| b.pickup_vertex == job.pickup.vertex)
            .map(|b| ((b.ep - ep).abs(), b.forecast))
            .filter(|&(d, _)| d <= self.config.match_window + TOL)
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out.into_iter().map(|(_, id)| id).collect()
    }

    /// Substitutes `job` for forecast `forecast` in place. Leaves everything
    /// unchanged and returns `None` when the substituted route is infeasible.
    pub fn try_bind(
        &mut self,
        forecast: u64,
        job: &Job,
        now: f64,
    ) -> Result<Option<u64>, ProphetError> {
        match self.bindings.get(&forecast) {
            Some(b) if b.status == BindingStatus::Pending => {}
            _ => return Err(ProphetError::DoubleBinding(forecast)),
        }
        let s = &self.scheduler;
        let Some(w) = s.holder(forecast) else {
            return Ok(None);
        };
        if !job.request.eligible(s.vehicle_name(w)) {
            return Ok(None);
        }
        let route = &s.routes[w];
        let kp = route
            .position(NodeKind::Pickup, forecast)
            .expect("holder has the pickup");
        if route.labels()[kp].depart < now - TOL {
            return Ok(None);
        }
        let mut pickup = job.pickup.clone();
        pickup.hold = pickup.hold.max(now);
        let metric = s.config.metric;
        let substituted = match route.position(NodeKind::Delivery, forecast) {
            Some(kd) => substitute(s, route, kp, pickup, kd, job.delivery.clone(), metric)?,
            None => place_delivery(s, route, kp, pickup, &job.delivery, metric)?,
        };
        let Some(new) = substituted else {
            return Ok(None);
        };
        let worker = new.worker;
        let s = &mut self.scheduler;
        s.routes[w] = new;
        s.jobs.remove(&forecast);
        s.jobs.insert(job.id(), job.clone());
        let b = self.bindings.get_mut(&forecast).expect("checked above");
        b.status = BindingStatus::Verified;
        b.matched = Some(job.id());
        Ok(Some(worker))
    }

    /// Expires every pending forecast whose matching window closed before
    /// `now`, removing the nodes its worker had not reached by then.
    pub fn expire(&mut self, now: f64) -> Result<Vec<u64>, ProphetError> {
        let window = self.config.match_window;
        let mut due: Vec<(f64, u64)> = self
            .bindings
            .values()
            .filter(|b| b.status == BindingStatus::Pending && b.ep + window < now)
            .map(|b| (b.ep + window, b.forecast))
            .collect();
        due.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out = Vec::new();
        for (at, id) in due {
            let s = &mut self.scheduler;
            if let Some(w) = s.holder(id) {
                let route = &s.routes[w];
                let unreached = |kind| {
                    route
                        .position(kind, id)
                        .is_some_and(|k| route.labels()[k].arrive > at)
                };
                let (drop_p, drop_d) = (unreached(NodeKind::Pickup), unreached(NodeKind::Delivery));
                let drop = |n: &PdNode| {
                    n.owner == id
                        && n.is_virtual
                        && match n.kind {
                            NodeKind::Pickup => drop_p,
                            NodeKind::Delivery => drop_d,
                            _ => false,
                        }
                };
                if let Some(short) = route.remove_where(drop, s.router())? {
                    s.routes[w] = short;
                }
            }
            s.jobs.remove(&id);
            self.bindings.get_mut(&id).expect("listed above").status = BindingStatus::Expired;
            out.push(id);
        }
        Ok(out)
    }
}

fn detour_tags(tags: &mut [LegTag], around: &[usize]) {
    for &k in around {
        if k > 0 {
            tags[k - 1] = LegTag::TimeOptimal;
        }
        if k < tags.len() {
            tags[k] = LegTag::TimeOptimal;
        }
    }
}

fn realize_feasible(
    s: &Scheduler,
    base: &Route,
    nodes: Vec<PdNode>,
    tags: Vec<LegTag>,
) -> Result<Option<Route>, RouteError> {
    match Route::realize(
        base.worker,
        base.vehicle,
        base.capacity,
        nodes,
        tags,
        s.router(),
    ) {
        Ok(r) if r.is_feasible() => Ok(Some(r)),
        Ok(_) | Err(RouteError::Disconnected { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Real nodes in place of both virtual ones; under the distance metric the
/// adjacent legs fall back to time-optimal if needed.
fn substitute(
    s: &Scheduler,
    route: &Route,
    kp: usize,
    pickup: PdNode,
    kd: usize,
    delivery: PdNode,
    metric: Metric,
) -> Result<Option<Route>, RouteError> {
    let mut nodes = route.nodes().to_vec();
    nodes[kp] = pickup;
    nodes[kd] = delivery;
    let tags = route.tags().to_vec();
    if let Some(r) = realize_feasible(s, route, nodes.clone(), tags.clone())? {
        return Ok(Some(r));
    }
    if metric != Metric::Distance {
        return Ok(None);
    }
    let mut tags = tags;
    detour_tags(&mut tags, &[kp, kd]);
    realize_feasible(s, route, nodes, tags)
}

/// Real pickup in place of the virtual one and the real delivery at its
/// cheapest feasible position after it.
fn place_delivery(
    s: &Scheduler,
    route: &Route,
    kp: usize,
    pickup: PdNode,
    delivery: &PdNode,
    metric: Metric,
) -> Result<Option<Route>, RouteError> {
    let mut base = route.nodes().to_vec();
    base[kp] = pickup;
    for detour in [metric.leg_tag(), LegTag::TimeOptimal] {
        let mut best: Option<Route> = None;
        for j in kp..route.len() - 1 {
            let mut nodes = base.clone();
            nodes.insert(j + 1, delivery.clone());
            let mut tags = route.tags().to_vec();
            tags.insert(j + 1, detour);
            tags[j] = detour;
            if let Some(r) = realize_feasible(s, route, nodes, tags)? {
                if best
                    .as_ref()
                    .is_none_or(|b| r.cost(metric) < b.cost(metric) - TOL)
                {
                    best = Some(r);
                }
            }
        }
        if best.is_some() || detour == LegTag::TimeOptimal {
            return Ok(best);
        }
    }
    Ok(None)
}
