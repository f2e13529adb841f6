use serde::Serialize;

use super::model::MilpModel;
use super::scalarize::ScalarizedPdGraph;
use super::MilpError;
use crate::pd::TOL;

pub const MAX_TINY_REQUESTS: usize = 6;
pub const MAX_TINY_WORKERS: usize = 3;

/// One worker's subtour in the scalar problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarRoute {
    /// PD node indices from shift start to shift end.
    pub nodes: Vec<usize>,
    /// Leg variant chosen per consecutive pair; empty for an unused worker.
    pub variants: Vec<usize>,
    /// Service completion times per node.
    pub times: Vec<f64>,
    pub cost: f64,
}

impl ScalarRoute {
    fn idle(sg: &ScalarizedPdGraph, w: usize) -> Self {
        let ws = sg.workers[w].start_time;
        Self {
            nodes: vec![sg.pd.start(w), sg.pd.end(w)],
            variants: Vec::new(),
            times: vec![ws, ws],
            cost: 0.0,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.variants.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TinySolution {
    pub routes: Vec<ScalarRoute>,
    pub served: Vec<u64>,
    /// Objective of the relaxed formulation: route costs minus profits.
    pub objective: f64,
}

#[derive(Clone)]
struct Partial {
    time: f64,
    cost: f64,
    times: Vec<f64>,
    variants: Vec<usize>,
}

struct Search<'a> {
    sg: &'a ScalarizedPdGraph,
    w: usize,
    forbidden: &'a [(usize, Vec<usize>)],
    best: Vec<Option<ScalarRoute>>,
}

impl Search<'_> {
    /// Extends each non-dominated partial label along arc `u -> v`.
    fn extend(&self, labels: &[Partial], u: usize, v: usize) -> Vec<Partial> {
        let Some(arc) = self.sg.arc_for(u, v, self.w) else {
            return Vec::new();
        };
        let (lo, hi) = self.sg.window(v);
        let mut out: Vec<Partial> = Vec::new();
        for l in labels {
            for (k, leg) in arc.legs.iter().enumerate() {
                let time = (l.time + leg.tau).max(lo);
                if time > hi + TOL {
                    continue;
                }
                let mut next = l.clone();
                next.time = time;
                next.cost += self.sg.cost(arc, leg);
                next.times.push(time);
                next.variants.push(k);
                out.push(next);
            }
        }
        pareto(out)
    }

    fn dfs(
        &mut self,
        path: &mut Vec<usize>,
        labels: Vec<Partial>,
        picked: u32,
        open: u32,
        load: f64,
    ) {
        let sg = self.sg;
        let pd = &sg.pd;
        let last = *path.last().expect("path starts at the shift start");
        if open == 0 && picked != 0 {
            let end = pd.end(self.w);
            path.push(end);
            let blocked = self
                .forbidden
                .iter()
                .any(|(w, s)| *w == self.w && s == path);
            if !blocked {
                let closed = self.extend(&labels, last, end);
                if let Some(l) = closed.into_iter().min_by(|a, b| a.cost.total_cmp(&b.cost)) {
                    let slot = &mut self.best[picked as usize];
                    if slot.as_ref().is_none_or(|b| l.cost < b.cost - TOL) {
                        *slot = Some(ScalarRoute {
                            nodes: path.clone(),
                            variants: l.variants,
                            times: l.times,
                            cost: l.cost,
                        });
                    }
                }
            }
            path.pop();
        }
        let capacity = sg.workers[self.w].capacity;
        for r in 0..pd.num_requests {
            let bit = 1u32 << r;
            let (next, load_after, picked2, open2) = if picked & bit == 0 {
                let q = sg.nodes[pd.pickup(r)].load;
                if load + q > capacity + TOL {
                    continue;
                }
                (pd.pickup(r), load + q, picked | bit, open | bit)
            } else if open & bit != 0 {
                (
                    pd.delivery(r),
                    load - sg.nodes[pd.delivery(r)].load,
                    picked,
                    open & !bit,
                )
            } else {
                continue;
            };
            let ext = self.extend(&labels, last, next);
            if ext.is_empty() {
                continue;
            }
            path.push(next);
            self.dfs(path, ext, picked2, open2, load_after);
            path.pop();
        }
    }
}

/// Keeps labels not dominated in both completion time and cost.
fn pareto(mut labels: Vec<Partial>) -> Vec<Partial> {
    labels.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.cost.total_cmp(&b.cost)));
    let mut out: Vec<Partial> = Vec::new();
    for l in labels {
        if out.last().is_none_or(|p| l.cost < p.cost - TOL) {
            out.push(l);
        }
    }
    out
}

/// Best route of worker `w` per served subset, by exhaustive enumeration of
/// pickup-before-delivery orders and leg variants.
fn best_routes(
    sg: &ScalarizedPdGraph,
    w: usize,
    forbidden: &[(usize, Vec<usize>)],
) -> Vec<Option<ScalarRoute>> {
    let n = sg.pd.num_requests;
    let mut search = Search {
        sg,
        w,
        forbidden,
        best: vec![None; 1 << n],
    };
    let ws = sg.workers[w].start_time;
    let start = Partial {
        time: ws,
        cost: 0.0,
        times: vec![ws],
        variants: Vec::new(),
    };
    let mut path = vec![sg.pd.start(w)];
    search.dfs(&mut path, vec![start], 0, 0, 0.0);
    search.best[0] = Some(ScalarRoute::idle(sg, w));
    search.best
}

/// Exact optimum of the relaxed formulation on tiny instances, skipping the
/// `(worker index, node sequence)` subtours in `forbidden`.
pub fn solve_exact_tiny(
    sg: &ScalarizedPdGraph,
    model: &MilpModel,
    forbidden: &[(usize, Vec<usize>)],
) -> Result<TinySolution, MilpError> {
    let (nr, nw) = (sg.pd.num_requests, sg.pd.num_workers);
    if nr > MAX_TINY_REQUESTS || nw > MAX_TINY_WORKERS {
        return Err(MilpError::TooLarge {
            requests: nr,
            workers: nw,
        });
    }
    let full = 1usize << nr;
    let per_worker: Vec<Vec<Option<ScalarRoute>>> =
        (0..nw).map(|w| best_routes(sg, w, forbidden)).collect();
    // f[mask]: cheapest split of `mask` over the workers seen so far, with choices
    let mut f: Vec<Option<(f64, Vec<usize>)>> = vec![None; full];
    f[0] = Some((0.0, Vec::new()));
    for routes in &per_worker {
        let mut g: Vec<Option<(f64, Vec<usize>)>> = vec![None; full];
        for mask in 0..full {
            let mut sub = mask;
            loop {
                if let (Some((base, picks)), Some(route)) = (&f[mask ^ sub], &routes[sub]) {
                    let cost = base + route.cost;
                    if g[mask].as_ref().is_none_or(|(c, _)| cost < c - TOL) {
                        let mut p = picks.clone();
                        p.push(sub);
                        g[mask] = Some((cost, p));
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
        }
        f = g;
    }
    let mut best: Option<(f64, usize)> = None;
    for (mask, entry) in f.iter().enumerate() {
        if let Some((cost, _)) = entry {
            let value = cost - model.sigma * mask.count_ones() as f64;
            if best.is_none_or(|(b, _)| value < b - TOL) {
                best = Some((value, mask));
            }
        }
    }
    let (objective, mask) = best.expect("the empty assignment is always feasible");
    let picks = &f[mask].as_ref().expect("chosen entry").1;
    let routes: Vec<ScalarRoute> = picks
        .iter()
        .enumerate()
        .map(|(w, &sub)| per_worker[w][sub].clone().expect("chosen route"))
        .collect();
    let served = (0..nr)
        .filter(|r| mask & (1 << r) != 0)
        .map(|r| sg.requests[r].id)
        .collect();
    Ok(TinySolution {
        routes,
        served,
        objective,
    })
}

/// Variable values realizing `routes` in `model`: arrival times propagate
/// along used arcs, and unused nodes sit at their earliest window time.
pub fn assignment(sg: &ScalarizedPdGraph, model: &MilpModel, routes: &[ScalarRoute]) -> Vec<f64> {
    let pd = &sg.pd;
    let mut x = vec![0.0; model.lp.vars.len()];
    for (v, &var) in model.a_vars.iter().enumerate() {
        x[var] = sg.window(v).0;
    }
    for (w, route) in routes.iter().enumerate() {
        if route.is_idle() {
            continue;
        }
        let mut load = 0.0;
        for (k, &v) in route.nodes.iter().enumerate() {
            x[model.a_vars[v]] = route.times[k];
            load += sg.nodes[v].load_delta();
            x[model.q_vars[v]] = load;
            if k + 1 < route.nodes.len() {
                let arc = pd
                    .arc_index(v, route.nodes[k + 1])
                    .expect("subtour arcs exist");
                let var = model
                    .arc_var(arc, route.variants[k], w)
                    .expect("arc variable exists");
                x[var] = 1.0;
            }
        }
        for r in 0..pd.num_requests {
            if route.nodes.contains(&pd.pickup(r)) {
                x[model.assign_vars[r][w]] = 1.0;
            }
        }
    }
    x
}
