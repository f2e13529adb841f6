use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metric::{GraphFile, RoadGraph, RoadGraphBuilder, TravelTimeFunction};
use crate::pd::{
    Instance, Point, Request, Worker, DEFAULT_CAPACITY, DEFAULT_DELIVERY_WINDOW, DEFAULT_LOAD,
    DEFAULT_SERVICE_TIME,
};

const DAY: f64 = 86_400.0;
const HOUR: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub seed: u64,
    /// Grid columns and rows.
    pub width: u64,
    pub height: u64,
    /// Block length in meters.
    pub spacing: f64,
    pub requests: usize,
    pub workers: usize,
    /// Requests are released uniformly in this range of the day, seconds.
    pub first_release: f64,
    pub last_release: f64,
    /// Largest Manhattan distance between a pickup and its delivery, meters.
    pub max_trip: f64,
    pub shift_length: f64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            width: 50,
            height: 50,
            spacing: 200.0,
            requests: 200,
            workers: 10,
            first_release: 7.0 * HOUR,
            last_release: 19.0 * HOUR,
            max_trip: 4000.0,
            shift_length: 9.0 * HOUR,
        }
    }
}

/// Morning and evening rush bumps in `[0, 1]`.
fn rush(t: f64) -> f64 {
    let bump = |center: f64, half_width: f64| {
        let d = (t - center).abs();
        if d < half_width {
            (0.5 + 0.5 * (PI * d / half_width).cos()).powi(2)
        } else {
            0.0
        }
    };
    bump(8.0 * HOUR, 2.0 * HOUR).max(bump(17.5 * HOUR, 2.5 * HOUR))
}

/// Half-hourly breakpoints: free flow scaled by `1 + amplitude * rush + noise`.
fn arc_ttf(rng: &mut ChaCha8Rng, free_flow: f64, amplitude: f64) -> TravelTimeFunction<f64> {
    let points = (0..48)
        .map(|k| {
            let t = k as f64 * 1800.0;
            let noise = rng.gen_range(0.0..0.1);
            (t, free_flow * (1.0 + amplitude * rush(t) + noise))
        })
        .collect();
    // breakpoints are 1800 s apart and travel times stay far below that, so
    // every slope exceeds -1
    TravelTimeFunction::new(DAY, points).expect("generated functions are FIFO")
}

/// Grid city with two-way streets; arterials every fifth line are faster
/// but congest harder.
pub fn generate_graph(spec: &GenSpec, rng: &mut ChaCha8Rng) -> RoadGraph<f64> {
    let (w, h) = (spec.width, spec.height);
    let mut b = RoadGraphBuilder::new(vec!["car".into()]);
    for y in 0..h {
        for x in 0..w {
            b.vertex(
                y * w + x,
                Some((x as f64 * spec.spacing, y as f64 * spec.spacing)),
            );
        }
    }
    let mut street = |b: &mut RoadGraphBuilder<f64>, u: u64, v: u64, arterial: bool| {
        let (speed, amplitude) = if arterial {
            (rng.gen_range(12.0..15.0), 1.5)
        } else {
            (rng.gen_range(7.0..10.0), 0.8)
        };
        let ff = spec.spacing / speed;
        let forward = arc_ttf(rng, ff, amplitude);
        let backward = arc_ttf(rng, ff, amplitude);
        b.arc(u, v, spec.spacing, vec![forward]);
        b.arc(v, u, spec.spacing, vec![backward]);
    };
    for y in 0..h {
        for x in 0..w {
            let v = y * w + x;
            if x + 1 < w {
                street(&mut b, v, v + 1, y % 5 == 0);
            }
            if y + 1 < h {
                street(&mut b, v, v + w, x % 5 == 0);
            }
        }
    }
    b.build().expect("generated graph is valid")
}

fn random_point(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Point {
    Point {
        x: rng.gen_range(0..spec.width) as f64 * spec.spacing,
        y: rng.gen_range(0..spec.height) as f64 * spec.spacing,
    }
}

fn nearby_point(spec: &GenSpec, rng: &mut ChaCha8Rng, p: Point) -> Point {
    loop {
        let q = random_point(spec, rng);
        let d = (q.x - p.x).abs() + (q.y - p.y).abs();
        if d > 0.0 && d <= spec.max_trip {
            return q;
        }
    }
}

/// Requests released at the order statistics of uniform draws (a Poisson
/// process conditioned on its count); pickups open up to 15 minutes later.
pub fn generate_requests(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Vec<Request> {
    let mut releases: Vec<f64> = (0..spec.requests)
        .map(|_| rng.gen_range(spec.first_release..spec.last_release).round())
        .collect();
    releases.sort_by(f64::total_cmp);
    releases
        .into_iter()
        .enumerate()
        .map(|(k, release)| {
            let p = random_point(spec, rng);
            let d = nearby_point(spec, rng, p);
            let ep = release + rng.gen_range(0..=15) as f64 * 60.0;
            Request {
                id: k as u64 + 1,
                pickup_point: p,
                earliest_pickup_time: ep,
                pickup_service_time: DEFAULT_SERVICE_TIME,
                delivery_point: d,
                latest_delivery_time: ep + DEFAULT_DELIVERY_WINDOW,
                delivery_service_time: DEFAULT_SERVICE_TIME,
                load: DEFAULT_LOAD,
                eligible_vehicle_types: None,
                release_time: release,
                is_virtual: false,
                probability: None,
            }
        })
        .collect()
}

/// Shifts staggered so that the first starts before the first release and
/// the last ends after the last release plus the delivery window.
pub fn generate_workers(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Vec<Worker> {
    let first = spec.first_release - HOUR;
    let last =
        (spec.last_release + DEFAULT_DELIVERY_WINDOW + 2.0 * HOUR - spec.shift_length).max(first);
    let n = spec.workers;
    (0..n)
        .map(|k| {
            let start = if n > 1 {
                first + (last - first) * k as f64 / (n - 1) as f64
            } else {
                first
            };
            let depot = random_point(spec, rng);
            Worker {
                id: k as u64 + 1,
                start_point: depot,
                start_time: start.round(),
                end_point: depot,
                end_time: (start + spec.shift_length).round(),
                capacity: DEFAULT_CAPACITY,
                vehicle_type: None,
            }
        })
        .collect()
}

/// Graph and instance for `spec`; identical specs give identical output.
pub fn generate(spec: &GenSpec) -> (RoadGraph<f64>, Instance) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let graph = generate_graph(spec, &mut rng);
    let requests = generate_requests(spec, &mut rng);
    let workers = generate_workers(spec, &mut rng);
    (graph, Instance { requests, workers })
}

/// Serialized graph and instance documents.
pub fn generate_json(spec: &GenSpec) -> (String, String) {
    let (graph, instance) = generate(spec);
    let graph: GraphFile = graph.to_file();
    (
        serde_json::to_string(&graph).expect("graph serializes"),
        serde_json::to_string_pretty(&instance).expect("instance serializes"),
    )
}
