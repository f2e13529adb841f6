use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::metrics::{run_metrics, RunMetrics};
use super::SimError;
use crate::insertion::{Decision, Scheduler, SchedulerConfig};
use crate::metric::{LegTag, Router};
use crate::pd::{Instance, NodeKind, Request, Route};
use crate::prophet::{Outcome, Prophet, ProphetConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Variant {
    Insertion,
    Prophet {
        config: ProphetConfig,
        forecasts: Vec<Request>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scheduler: SchedulerConfig,
    pub variant: Variant,
}

impl RunConfig {
    pub fn insertion(scheduler: SchedulerConfig) -> Self {
        Self {
            scheduler,
            variant: Variant::Insertion,
        }
    }

    pub fn prophet(scheduler: SchedulerConfig, forecasts: Vec<Request>) -> Self {
        Self {
            scheduler,
            variant: Variant::Prophet {
                config: ProphetConfig::default(),
                forecasts,
            },
        }
    }

    /// Short variant label such as `time/l1+wb+rr` or `prophet:dist/l2`.
    pub fn label(&self) -> String {
        let s = &self.scheduler;
        let metric = match s.metric {
            crate::pd::Metric::Time => "time",
            crate::pd::Metric::Distance => "dist",
        };
        let norm = match s.norm {
            crate::insertion::Norm::L1 => "l1",
            crate::insertion::Norm::L2 => "l2",
        };
        let mut out = String::new();
        if matches!(self.variant, Variant::Prophet { .. }) {
            out.push_str("prophet:");
        }
        out.push_str(&format!("{metric}/{norm}"));
        if s.wb.is_some() {
            out.push_str("+wb");
        }
        if s.rr {
            out.push_str("+rr");
        }
        out
    }
}

/// One entry of the event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum Event {
    Seeded {
        time: f64,
        unplaced: Vec<u64>,
    },
    Assigned {
        time: f64,
        request: u64,
        worker: u64,
        i: usize,
        j: usize,
        contingency: bool,
    },
    Rejected {
        time: f64,
        request: u64,
    },
    Verified {
        time: f64,
        request: u64,
        forecast: u64,
        worker: u64,
    },
    Dropped {
        time: f64,
        forecast: u64,
        by: u64,
    },
    Expired {
        time: f64,
        forecast: u64,
    },
    Relocated {
        time: f64,
        request: u64,
        from: u64,
        to: u64,
        objective_before: f64,
        objective_after: f64,
    },
    Sweep {
        time: f64,
        objective_before: f64,
        objective_after: f64,
        served_before: usize,
        served_after: usize,
    },
}

impl Event {
    pub fn time(&self) -> f64 {
        match self {
            Event::Seeded { time, .. }
            | Event::Assigned { time, .. }
            | Event::Rejected { time, .. }
            | Event::Verified { time, .. }
            | Event::Dropped { time, .. }
            | Event::Expired { time, .. }
            | Event::Relocated { time, .. }
            | Event::Sweep { time, .. } => *time,
        }
    }

    /// The real request this event decides on, if any.
    pub fn request(&self) -> Option<u64> {
        match self {
            Event::Assigned { request, .. }
            | Event::Rejected { request, .. }
            | Event::Verified { request, .. }
            | Event::Relocated { request, .. } => Some(*request),
            Event::Dropped { by, .. } => Some(*by),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteStop {
    pub kind: NodeKind,
    pub owner: u64,
    pub is_virtual: bool,
    pub arrive: f64,
    pub depart: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteRecord {
    pub worker: u64,
    pub length_m: f64,
    pub travel_time_s: f64,
    pub stops: Vec<RouteStop>,
    pub tags: Vec<LegTag>,
}

impl RouteRecord {
    pub fn from_route(r: &Route) -> Self {
        Self {
            worker: r.worker,
            length_m: r.length(),
            travel_time_s: r.travel_time(),
            stops: r
                .nodes()
                .iter()
                .zip(r.labels())
                .map(|(n, l)| RouteStop {
                    kind: n.kind,
                    owner: n.owner,
                    is_virtual: n.is_virtual,
                    arrive: l.arrive,
                    depart: l.depart,
                })
                .collect(),
            tags: r.tags().to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub label: String,
    pub metrics: RunMetrics,
    pub events: Vec<Event>,
    pub routes: Vec<Route>,
    /// Real request ids in replay order.
    pub order: Vec<u64>,
    /// Wall-clock scheduling time per entry of `order`, milliseconds.
    pub latencies_ms: Vec<f64>,
    pub objective: f64,
}

impl RunResult {
    pub fn events_jsonl(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("events serialize") + "\n")
            .collect()
    }

    pub fn routes_json(&self) -> String {
        let records: Vec<RouteRecord> = self.routes.iter().map(RouteRecord::from_route).collect();
        serde_json::to_string_pretty(&records).expect("routes serialize")
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("request,latency_ms\n");
        for (id, ms) in self.order.iter().zip(&self.latencies_ms) {
            out.push_str(&format!("{id},{ms:.3}\n"));
        }
        out
    }
}

enum Engine {
    Plain(Scheduler),
    Prophet(Box<Prophet>),
}

impl Engine {
    fn scheduler(&self) -> &Scheduler {
        match self {
            Engine::Plain(s) => s,
            Engine::Prophet(p) => &p.scheduler,
        }
    }

    fn scheduler_mut(&mut self) -> &mut Scheduler {
        match self {
            Engine::Plain(s) => s,
            Engine::Prophet(p) => &mut p.scheduler,
        }
    }
}

fn served(s: &Scheduler) -> usize {
    s.routes()
        .iter()
        .flat_map(|r| r.nodes())
        .filter(|n| n.kind == NodeKind::Pickup && !n.is_virtual)
        .count()
}

/// Real requests in release order; ties by id.
pub fn release_order(instance: &Instance) -> Vec<&Request> {
    let mut order: Vec<&Request> = instance.requests.iter().filter(|r| !r.is_virtual).collect();
    order.sort_by(|a, b| {
        a.release_time
            .total_cmp(&b.release_time)
            .then(a.id.cmp(&b.id))
    });
    order
}

/// Replays `instance` online: each request becomes visible at its release
/// time and is handled before the next one is seen.
pub fn replay(
    router: Arc<Router>,
    instance: &Instance,
    config: &RunConfig,
) -> Result<RunResult, SimError> {
    instance.check_ids()?;
    instance.check_against(router.graph())?;
    let scheduler = Scheduler::new(router, instance.workers.clone(), config.scheduler)?;
    let mut events = Vec::new();
    let order = release_order(instance);
    let mut engine = match &config.variant {
        Variant::Insertion => Engine::Plain(scheduler),
        Variant::Prophet { config, forecasts } => {
            let mut p = Prophet::new(scheduler, *config);
            if !forecasts.is_empty() {
                let unplaced = p.seed_forecasts(forecasts.clone())?;
                events.push(Event::Seeded {
                    time: order.first().map_or(0.0, |r| r.release_time),
                    unplaced,
                });
            }
            Engine::Prophet(Box::new(p))
        }
    };
    let ids: Vec<u64> = order.iter().map(|r| r.id).collect();
    let mut latencies_ms = Vec::with_capacity(order.len());
    for r in order {
        let now = r.release_time;
        let started = Instant::now();
        let job = engine.scheduler().make_job(r.clone())?;
        match &mut engine {
            Engine::Plain(s) => events.push(decision_event(now, r.id, s.assign_request(job, now))),
            Engine::Prophet(p) => {
                for forecast in p.expire(now)? {
                    events.push(Event::Expired {
                        time: now,
                        forecast,
                    });
                }
                match p.handle(job, now)? {
                    Outcome::Verified { worker, forecast } => events.push(Event::Verified {
                        time: now,
                        request: r.id,
                        forecast,
                        worker,
                    }),
                    Outcome::Inserted { decision, dropped } => {
                        events.push(decision_event(now, r.id, decision));
                        events.extend(dropped.into_iter().map(|forecast| Event::Dropped {
                            time: now,
                            forecast,
                            by: r.id,
                        }));
                    }
                }
            }
        }
        let s = engine.scheduler_mut();
        if s.config.rr {
            let (objective_before, served_before) = (s.objective(), served(s));
            for m in s.relocate_requests(now) {
                events.push(Event::Relocated {
                    time: now,
                    request: m.request,
                    from: m.from,
                    to: m.to,
                    objective_before: m.objective_before,
                    objective_after: m.objective_after,
                });
            }
            events.push(Event::Sweep {
                time: now,
                objective_before,
                objective_after: s.objective(),
                served_before,
                served_after: served(s),
            });
        }
        latencies_ms.push(started.elapsed().as_secs_f64() * 1000.0);
    }
    if let Engine::Prophet(p) = &mut engine {
        let end = instance
            .workers
            .iter()
            .map(|w| w.end_time)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(
                instance
                    .requests
                    .iter()
                    .map(|r| r.release_time)
                    .fold(f64::NEG_INFINITY, f64::max),
            );
        for forecast in p.expire(f64::INFINITY)? {
            events.push(Event::Expired {
                time: end,
                forecast,
            });
        }
    }
    let s = engine.scheduler();
    let routes = s.routes().to_vec();
    let metrics = run_metrics(instance, &routes, &latencies_ms);
    Ok(RunResult {
        label: config.label(),
        metrics,
        events,
        objective: s.objective(),
        routes,
        order: ids,
        latencies_ms,
    })
}

fn decision_event(time: f64, request: u64, d: Decision) -> Event {
    match d {
        Decision::Assigned {
            worker,
            i,
            j,
            contingency,
            ..
        } => Event::Assigned {
            time,
            request,
            worker,
            i,
            j,
            contingency,
        },
        Decision::Rejected => Event::Rejected { time, request },
    }
}
