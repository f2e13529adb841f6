//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdvrp::insertion::{CandidateStatus, Norm, Scheduler};
use tdvrp::metric::{ArcId, LegTag, RoadGraph, RoadGraphBuilder, Router, TravelTimeFunction};
use tdvrp::pd::{Metric, PdNode, Point, Request, Route, Worker, TOL};

pub const DAY: f64 = 86_400.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random periodic FIFO function: breakpoints at least 1000 s apart, values in
/// `[lo, lo + 900]`, so every slope (including the wrap) exceeds -1.
pub fn random_ttf(rng: &mut ChaCha8Rng, lo: f64) -> TravelTimeFunction<f64> {
    let k = rng.gen_range(1..=6);
    let mut t = rng.gen_range(0.0..1000.0);
    let mut points = Vec::new();
    for _ in 0..k {
        points.push((t, lo + rng.gen_range(0.0..900.0)));
        t += rng.gen_range(1000.0..(DAY - 1000.0) / k as f64);
    }
    TravelTimeFunction::new(DAY, points).unwrap()
}

/// Random digraph on `n` vertices with a Hamiltonian cycle (so it is
/// strongly connected) plus extra arcs, parallel arcs included.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> RoadGraph<f64> {
    let mut b = RoadGraphBuilder::new(vec!["car".into()]);
    for v in 0..n {
        b.vertex(
            v as u64,
            Some((rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0))),
        );
    }
    let arc = |b: &mut RoadGraphBuilder<f64>, rng: &mut ChaCha8Rng, u: usize, v: usize| {
        let lo = rng.gen_range(30.0..300.0);
        let ttf = random_ttf(rng, lo);
        b.arc(u as u64, v as u64, rng.gen_range(50.0..800.0), vec![ttf]);
    };
    for v in 0..n {
        arc(&mut b, rng, v, (v + 1) % n);
    }
    let extra = rng.gen_range(0..=n * 2);
    for _ in 0..extra {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            arc(&mut b, rng, u, v);
        }
    }
    b.build().unwrap()
}

/// Earliest arrival at every vertex over all simple paths, by exhaustive DFS.
pub fn enumerate_earliest(g: &RoadGraph<f64>, origin: usize, departure: f64) -> Vec<f64> {
    fn dfs(g: &RoadGraph<f64>, v: usize, t: f64, on_path: &mut Vec<bool>, best: &mut Vec<f64>) {
        best[v] = best[v].min(t);
        for &a in g.out_arcs(v) {
            let arc = g.arc(a);
            if !on_path[arc.head] {
                on_path[arc.head] = true;
                dfs(g, arc.head, arc.ttf[0].arrival(t), on_path, best);
                on_path[arc.head] = false;
            }
        }
    }
    let n = g.num_vertices();
    let mut best = vec![f64::INFINITY; n];
    let mut on_path = vec![false; n];
    on_path[origin] = true;
    dfs(g, origin, departure, &mut on_path, &mut best);
    best
}

/// Random walk of up to `len` arcs.
pub fn random_walk(rng: &mut ChaCha8Rng, g: &RoadGraph<f64>, len: usize) -> Vec<ArcId> {
    let mut v = rng.gen_range(0..g.num_vertices());
    let mut out = Vec::new();
    for _ in 0..len {
        let arcs = g.out_arcs(v);
        if arcs.is_empty() {
            break;
        }
        let a = arcs[rng.gen_range(0..arcs.len())];
        out.push(a);
        v = g.arc(a).head;
    }
    out
}

pub fn at(x: f64, y: f64) -> Point {
    Point { x, y }
}

pub fn worker(id: u64, start: Point, ws: f64, we: f64) -> Worker {
    Worker {
        id,
        start_point: start,
        start_time: ws,
        end_point: start,
        end_time: we,
        capacity: 3.0,
        vehicle_type: None,
    }
}

pub fn request(id: u64, p: Point, d: Point, ep: f64, ld: f64) -> Request {
    Request {
        id,
        pickup_point: p,
        earliest_pickup_time: ep,
        pickup_service_time: 0.0,
        delivery_point: d,
        latest_delivery_time: ld,
        delivery_service_time: 0.0,
        load: 1.0,
        eligible_vehicle_types: None,
        release_time: 0.0,
        is_virtual: false,
        probability: None,
    }
}

/// `w x h` grid with 100 m blocks. `ttf` gives the function of each arc.
pub fn grid_with(w: u64, h: u64, mut ttf: impl FnMut() -> TravelTimeFunction<f64>) -> Arc<Router> {
    let mut b = RoadGraphBuilder::new(vec!["car".into()]);
    for y in 0..h {
        for x in 0..w {
            b.vertex(y * w + x, Some((x as f64 * 100.0, y as f64 * 100.0)));
        }
    }
    for y in 0..h {
        for x in 0..w {
            let v = y * w + x;
            if x + 1 < w {
                b.arc(v, v + 1, 100.0, vec![ttf()]);
                b.arc(v + 1, v, 100.0, vec![ttf()]);
            }
            if y + 1 < h {
                b.arc(v, v + w, 100.0, vec![ttf()]);
                b.arc(v + w, v, 100.0, vec![ttf()]);
            }
        }
    }
    Arc::new(Router::new(Arc::new(b.build().unwrap())))
}

/// Two parallel roads from `(0,0)` to `(1000,0)`: a short slow one
/// (1000 m, 45 min) and a long fast one (1600 m, 27 min).
pub fn two_roads() -> Arc<Router> {
    let mut b = RoadGraphBuilder::new(vec!["car".into()]);
    b.vertex(0, Some((0.0, 0.0)));
    b.vertex(1, Some((500.0, 300.0)));
    b.vertex(2, Some((500.0, -300.0)));
    b.vertex(3, Some((1000.0, 0.0)));
    let c = |v: f64| vec![TravelTimeFunction::constant(DAY, v).unwrap()];
    for (u, v, len, t) in [
        (0, 1, 500.0, 1350.0),
        (1, 3, 500.0, 1350.0),
        (0, 2, 800.0, 810.0),
        (2, 3, 800.0, 810.0),
    ] {
        b.arc(u, v, len, c(t));
        b.arc(v, u, len, c(t));
    }
    Arc::new(Router::new(Arc::new(b.build().unwrap())))
}

/// Small random instance on a grid of `w x h` blocks.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    w: u64,
    h: u64,
    requests: usize,
    workers: usize,
) -> (Vec<Request>, Vec<Worker>) {
    let point = |rng: &mut ChaCha8Rng| {
        at(
            rng.gen_range(0..w) as f64 * 100.0,
            rng.gen_range(0..h) as f64 * 100.0,
        )
    };
    let ws: Vec<Worker> = (0..workers)
        .map(|k| {
            let mut wk = worker(
                k as u64 + 1,
                point(rng),
                rng.gen_range(0.0..600.0),
                rng.gen_range(3000.0..6000.0),
            );
            wk.capacity = rng.gen_range(1..=3) as f64;
            wk
        })
        .collect();
    let mut release = 0.0;
    let rs = (0..requests)
        .map(|k| {
            let p = point(rng);
            let mut d = point(rng);
            while d == p {
                d = point(rng);
            }
            release += rng.gen_range(0.0..300.0);
            let ep = release + rng.gen_range(0.0..300.0);
            let mut r = request(k as u64 + 1, p, d, ep, ep + rng.gen_range(300.0..2400.0));
            r.release_time = release;
            r.pickup_service_time = rng.gen_range(0..=3) as f64 * 30.0;
            r.delivery_service_time = rng.gen_range(0..=3) as f64 * 30.0;
            r
        })
        .collect();
    (rs, ws)
}

/// Node and tag sequence of inserting `p` after `v_i` and `d` after `v_j`.
pub fn insert_layout(
    route: &Route,
    p: &PdNode,
    d: &PdNode,
    i: usize,
    j: usize,
    now: f64,
    detour: LegTag,
) -> (Vec<PdNode>, Vec<LegTag>) {
    let old = route.nodes();
    let tags = route.tags();
    let mut nodes: Vec<PdNode> = old[..=i].to_vec();
    if route.labels()[i].depart < now - TOL {
        nodes[i].hold = nodes[i].hold.max(now);
    }
    let mut t: Vec<LegTag> = tags[..i].to_vec();
    nodes.push(p.clone());
    t.push(detour);
    for k in i + 1..=j {
        nodes.push(old[k].clone());
        t.push(if k == i + 1 { detour } else { tags[k - 1] });
    }
    nodes.push(d.clone());
    t.push(detour);
    t.push(detour);
    nodes.extend_from_slice(&old[j + 1..]);
    t.extend_from_slice(&tags[j + 1..]);
    (nodes, t)
}

/// Gate: the worker has not left `v_i`, or only the shift end lies ahead.
pub fn open_position(route: &Route, i: usize, now: f64) -> bool {
    route.labels()[i].depart >= now - TOL || i + 2 == route.len()
}

pub fn norm_cost(c: f64, norm: Norm) -> f64 {
    match norm {
        Norm::L1 => c,
        Norm::L2 => c * c,
    }
}

/// Full relabel of one candidate: `Some(score)` when the new route is feasible.
#[allow(clippy::too_many_arguments)]
pub fn oracle_score(
    router: &Router,
    route: &Route,
    p: &PdNode,
    d: &PdNode,
    (i, j): (usize, usize),
    now: f64,
    detour: LegTag,
    metric: Metric,
    norm: Norm,
) -> Option<f64> {
    let (nodes, tags) = insert_layout(route, p, d, i, j, now, detour);
    let new = Route::realize(
        route.worker,
        route.vehicle,
        route.capacity,
        nodes,
        tags,
        router,
    )
    .ok()?;
    new.is_feasible()
        .then(|| norm_cost(new.cost(metric), norm) - norm_cost(route.cost(metric), norm))
}

/// Brute-force argmin with the scheduler's tie rule: scan workers by id, then
/// `i`, then `j`; a later candidate wins only if better by more than `TOL`.
pub fn brute_force_best(
    s: &Scheduler,
    p: &PdNode,
    d: &PdNode,
    now: f64,
    detour: LegTag,
) -> Option<(u64, usize, usize, f64)> {
    let (metric, norm) = (s.config.metric, s.config.norm);
    let mut best: Option<(u64, usize, usize, f64)> = None;
    for route in s.routes() {
        let n = route.len();
        for i in 0..n - 1 {
            if !open_position(route, i, now) {
                continue;
            }
            for j in i..n - 1 {
                if let Some(score) =
                    oracle_score(s.router(), route, p, d, (i, j), now, detour, metric, norm)
                {
                    if best.is_none_or(|b| score < b.3 - TOL) {
                        best = Some((route.worker, i, j, score));
                    }
                }
            }
        }
    }
    best
}

pub fn is_prune(status: CandidateStatus) -> Option<bool> {
    match status {
        CandidateStatus::PrunedCapacity { bulk } | CandidateStatus::PrunedSlack { bulk } => {
            Some(bulk)
        }
        _ => None,
    }
}
