//! Small graphs and records shared by unit tests.

use std::sync::Arc;

use crate::metric::{RoadGraphBuilder, Router, TravelTimeFunction};
use crate::pd::{Point, Request, Worker};

pub const DAY: f64 = 86_400.0;

/// `w x h` grid, 100 m spacing, constant `secs` per arc in both directions.
pub fn grid(w: u64, h: u64, secs: f64) -> Arc<Router> {
    let mut b = RoadGraphBuilder::new(vec!["car".into()]);
    for y in 0..h {
        for x in 0..w {
            b.vertex(y * w + x, Some((x as f64 * 100.0, y as f64 * 100.0)));
        }
    }
    let c = || vec![TravelTimeFunction::constant(DAY, secs).unwrap()];
    for y in 0..h {
        for x in 0..w {
            let v = y * w + x;
            if x + 1 < w {
                b.arc(v, v + 1, 100.0, c());
                b.arc(v + 1, v, 100.0, c());
            }
            if y + 1 < h {
                b.arc(v, v + w, 100.0, c());
                b.arc(v + w, v, 100.0, c());
            }
        }
    }
    Arc::new(Router::new(Arc::new(b.build().unwrap())))
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

/// Two parallel roads from `(0,0)` to `(1000,0)`: a short slow one via
/// `(500,300)` (1000 m, 2700 s) and a long fast one via `(500,-300)` (1600 m, 1620 s).
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

pub fn forecast(id: u64, p: Point, d: Point, ep: f64, probability: f64) -> Request {
    Request {
        is_virtual: true,
        probability: Some(probability),
        ..request(id, p, d, ep, ep + 2400.0)
    }
}
