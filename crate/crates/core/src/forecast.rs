//! Forecast requests from several days of request history: events are binned
//! into a space-time grid and requests from different days that share cells
//! and look alike are merged into one virtual request whose probability is
//! the share of sampled days it appeared on.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pd::{PdError, Point, Request};

const DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("grid: {0}")]
    Spec(String),
    #[error("history: {0}")]
    Parse(String),
    #[error(transparent)]
    Request(#[from] PdError),
    #[error("history spans {found} distinct days but the grid samples {days}")]
    TooManyDays { found: usize, days: usize },
}

/// Axis-aligned area covered by the grid, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Cell side in meters.
    pub cell_size: f64,
    pub windows_per_day: usize,
    /// Number of sampled days.
    pub days: usize,
    /// Covered area; the history's bounding box when absent.
    pub bounds: Option<Bounds>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            cell_size: 500.0,
            windows_per_day: 48,
            days: 1,
            bounds: None,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), ForecastError> {
        if !(self.cell_size > 0.0) || !self.cell_size.is_finite() {
            return Err(ForecastError::Spec("cell size must be positive".into()));
        }
        if self.windows_per_day < 24 {
            return Err(ForecastError::Spec("at least 24 windows per day".into()));
        }
        if self.days == 0 {
            return Err(ForecastError::Spec("at least one sampled day".into()));
        }
        Ok(())
    }

    pub fn window_length(&self) -> f64 {
        DAY / self.windows_per_day as f64
    }
}

/// A historical request tagged with the day it was sampled on.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRequest {
    pub day: u32,
    pub request: Request,
}

/// Parses a JSON list of requests, each carrying an integer `day` field.
pub fn history_from_json(text: &str) -> Result<Vec<HistoryRequest>, ForecastError> {
    let values: Vec<serde_json::Value> =
        serde_json::from_str(text).map_err(|e| ForecastError::Parse(e.to_string()))?;
    values
        .into_iter()
        .enumerate()
        .map(|(k, mut v)| {
            let day = v
                .as_object_mut()
                .and_then(|o| o.remove("day"))
                .and_then(|d| d.as_u64())
                .and_then(|d| u32::try_from(d).ok())
                .ok_or_else(|| {
                    ForecastError::Parse(format!("entry {k}: missing or invalid `day`"))
                })?;
            let request = serde_json::from_value(v)
                .map_err(|e| ForecastError::Parse(format!("entry {k}: {e}")))?;
            Ok(HistoryRequest { day, request })
        })
        .collect()
}

/// Space-time cell: column, row and time window of the day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
    pub window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Pickup,
    Delivery,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub day: u32,
    pub request: Request,
    pub pickup: Cell,
    pub delivery: Cell,
}

/// History binned by cell. Entries keep input order; no merging happens here.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: GridSpec,
    pub bounds: Bounds,
    pub columns: usize,
    pub rows: usize,
    pub entries: Vec<GridEntry>,
    /// Entry indices per (cell, event kind).
    pub events: BTreeMap<(Cell, EventKind), Vec<usize>>,
    /// Number of coordinates clamped onto the border.
    pub clamped: usize,
}

impl Grid {
    pub fn num_events(&self) -> usize {
        self.events.values().map(Vec::len).sum()
    }
}

/// Cell index along one axis; a coordinate on an interior edge belongs to the
/// lower cell.
fn axis_index(v: f64, min: f64, size: f64, n: usize) -> (usize, bool) {
    let raw = ((v - min) / size).ceil() - 1.0;
    let clamped = raw.clamp(0.0, (n - 1) as f64);
    let outside = v < min - 1e-9 || raw > (n - 1) as f64;
    (clamped as usize, outside)
}

fn bounding_box(history: &[HistoryRequest]) -> Bounds {
    let mut min = Point {
        x: f64::INFINITY,
        y: f64::INFINITY,
    };
    let mut max = Point {
        x: f64::NEG_INFINITY,
        y: f64::NEG_INFINITY,
    };
    for p in history
        .iter()
        .flat_map(|h| [h.request.pickup_point, h.request.delivery_point])
    {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    if !min.x.is_finite() {
        min = Point { x: 0.0, y: 0.0 };
        max = min;
    }
    Bounds { min, max }
}

/// Bins every request's pickup and delivery event.
pub fn build_grid(history: &[HistoryRequest], spec: &GridSpec) -> Result<Grid, ForecastError> {
    spec.validate()?;
    let days: BTreeSet<u32> = history.iter().map(|h| h.day).collect();
    if days.len() > spec.days {
        return Err(ForecastError::TooManyDays {
            found: days.len(),
            days: spec.days,
        });
    }
    let bounds = spec.bounds.unwrap_or_else(|| bounding_box(history));
    let d = spec.cell_size;
    let columns = (((bounds.max.x - bounds.min.x) / d).ceil() as usize).max(1);
    let rows = (((bounds.max.y - bounds.min.y) / d).ceil() as usize).max(1);
    let wlen = spec.window_length();
    let mut clamped = 0;
    let mut cell = |p: Point, t: f64, id: u64| {
        let (x, ox) = axis_index(p.x, bounds.min.x, d, columns);
        let (y, oy) = axis_index(p.y, bounds.min.y, d, rows);
        if ox || oy {
            log::warn!(
                "request {id}: point ({}, {}) outside the grid; clamped to the border",
                p.x,
                p.y
            );
            clamped += 1;
        }
        let window = ((t.rem_euclid(DAY) / wlen).floor() as usize).min(spec.windows_per_day - 1);
        Cell { x, y, window }
    };
    let mut entries = Vec::with_capacity(history.len());
    let mut events: BTreeMap<(Cell, EventKind), Vec<usize>> = BTreeMap::new();
    for (k, h) in history.iter().enumerate() {
        h.request.validate()?;
        let r = &h.request;
        let pickup = cell(r.pickup_point, r.earliest_pickup_time, r.id);
        let delivery = cell(r.delivery_point, r.latest_delivery_time, r.id);
        events
            .entry((pickup, EventKind::Pickup))
            .or_default()
            .push(k);
        events
            .entry((delivery, EventKind::Delivery))
            .or_default()
            .push(k);
        entries.push(GridEntry {
            day: h.day,
            request: r.clone(),
            pickup,
            delivery,
        });
    }
    Ok(Grid {
        spec: spec.clone(),
        bounds,
        columns,
        rows,
        entries,
        events,
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    #[default]
    Average,
    Median,
}

impl Aggregator {
    fn apply(self, values: &mut [f64]) -> f64 {
        let n = values.len();
        match self {
            Aggregator::Average => values.iter().sum::<f64>() / n as f64,
            Aggregator::Median => {
                values.sort_by(f64::total_cmp);
                if n % 2 == 1 {
                    values[n / 2]
                } else {
                    (values[n / 2 - 1] + values[n / 2]) / 2.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    /// Largest earliest-pickup difference of a mergeable pair, in seconds.
    pub max_pickup_gap: f64,
    /// Largest load difference of a mergeable pair.
    pub max_load_gap: f64,
    pub aggregator: Aggregator,
    /// Forecast ids count up from here.
    pub first_id: u64,
}

impl MergeConfig {
    /// Half a time window for pickups, one load unit.
    pub fn for_spec(spec: &GridSpec) -> Self {
        Self {
            max_pickup_gap: spec.window_length() / 2.0,
            max_load_gap: 1.0,
            aggregator: Aggregator::Average,
            first_id: 1_000_000,
        }
    }
}

/// A group of source requests from pairwise distinct days.
#[derive(Debug, Clone)]
struct Cluster {
    members: Vec<usize>,
    days: BTreeSet<u32>,
    repr: Request,
}

fn vehicle_set(r: &Request) -> Option<BTreeSet<&str>> {
    r.eligible_vehicle_types
        .as_ref()
        .map(|v| v.iter().map(String::as_str).collect())
}

fn aggregate(grid: &Grid, members: &[usize], agg: Aggregator, days: usize) -> Request {
    let reqs: Vec<&Request> = members.iter().map(|&k| &grid.entries[k].request).collect();
    let of =
        |f: &dyn Fn(&Request) -> f64| agg.apply(&mut reqs.iter().map(|r| f(r)).collect::<Vec<_>>());
    let ep = of(&|r| r.earliest_pickup_time);
    let ld = of(&|r| r.latest_delivery_time).max(ep + 1.0);
    let first = reqs[0];
    let distinct: BTreeSet<u32> = members.iter().map(|&k| grid.entries[k].day).collect();
    Request {
        id: first.id,
        pickup_point: Point {
            x: of(&|r| r.pickup_point.x),
            y: of(&|r| r.pickup_point.y),
        },
        earliest_pickup_time: ep,
        pickup_service_time: of(&|r| r.pickup_service_time),
        delivery_point: Point {
            x: of(&|r| r.delivery_point.x),
            y: of(&|r| r.delivery_point.y),
        },
        latest_delivery_time: ld,
        delivery_service_time: of(&|r| r.delivery_service_time),
        load: of(&|r| r.load),
        eligible_vehicle_types: first.eligible_vehicle_types.clone(),
        release_time: ep,
        is_virtual: true,
        probability: Some(distinct.len() as f64 / days as f64),
    }
}

fn mergeable(grid: &Grid, a: &Cluster, b: &Cluster, cfg: &MergeConfig) -> bool {
    let (ea, eb) = (&grid.entries[a.members[0]], &grid.entries[b.members[0]]);
    a.days.is_disjoint(&b.days)
        && ea.pickup == eb.pickup
        && ea.delivery == eb.delivery
        && (a.repr.earliest_pickup_time - b.repr.earliest_pickup_time).abs() <= cfg.max_pickup_gap
        && (a.repr.load - b.repr.load).abs() <= cfg.max_load_gap
        && vehicle_set(&a.repr) == vehicle_set(&b.repr)
}

/// Merges cross-day look-alikes until no pair qualifies. Pairs are tried in
/// ascending `(day, id)` order of their first members; the merged request
/// aggregates its members and takes their distinct-day share as probability.
pub fn merge_forecasts(grid: &Grid, cfg: &MergeConfig) -> Vec<Request> {
    let days = grid.spec.days;
    let mut order: Vec<usize> = (0..grid.entries.len()).collect();
    order.sort_by_key(|&k| (grid.entries[k].day, grid.entries[k].request.id, k));
    let mut clusters: Vec<Cluster> = order
        .into_iter()
        .map(|k| Cluster {
            members: vec![k],
            days: BTreeSet::from([grid.entries[k].day]),
            repr: aggregate(grid, &[k], cfg.aggregator, days),
        })
        .collect();
    'fixpoint: loop {
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                if mergeable(grid, &clusters[i], &clusters[j], cfg) {
                    let b = clusters.remove(j);
                    let a = &mut clusters[i];
                    a.members.extend(b.members);
                    a.days.extend(b.days);
                    a.repr = aggregate(grid, &a.members, cfg.aggregator, days);
                    continue 'fixpoint;
                }
            }
        }
        break;
    }
    clusters
        .into_iter()
        .enumerate()
        .map(|(k, c)| Request {
            id: cfg.first_id + k as u64,
            ..c.repr
        })
        .collect()
}

/// Grid and merge in one step.
pub fn forecasts_from_history(
    history: &[HistoryRequest],
    spec: &GridSpec,
    cfg: &MergeConfig,
) -> Result<Vec<Request>, ForecastError> {
    Ok(merge_forecasts(&build_grid(history, spec)?, cfg))
}

/// Pretty JSON accepted by the forecast reader.
pub fn forecasts_to_json(forecasts: &[Request]) -> String {
    serde_json::to_string_pretty(forecasts).expect("requests serialize")
}
