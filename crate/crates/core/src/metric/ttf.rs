use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TtfError {
    #[error("travel-time function has no breakpoints")]
    Empty,
    #[error("period must be positive, got {0}")]
    BadPeriod(f64),
    #[error("breakpoint {index} at t={t} lies outside [0, period)")]
    OutOfRange { index: usize, t: f64 },
    #[error("breakpoint times are not strictly increasing at index {index}")]
    NotIncreasing { index: usize },
    #[error("breakpoint {index} has non-positive travel time {value}")]
    NonPositive { index: usize, value: f64 },
    #[error("segment {segment} has slope {slope} < -1, violating FIFO")]
    NonFifo { segment: usize, slope: f64 },
}

/// Periodic, continuous, piecewise-linear arc travel time.
///
/// Breakpoints `(t, value)` lie in `[0, period)`; between the last breakpoint
/// and `period + first.t` the function interpolates back to the first value.
/// Construction rejects any piece with slope below `-1`, which is exactly the
/// condition for `t + f(t)` to be non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeFunction<T> {
    period: T,
    points: Vec<(T, T)>,
}

impl<T: Scalar> TravelTimeFunction<T> {
    pub fn new(period: T, points: Vec<(T, T)>) -> Result<Self, TtfError> {
        if !(period > T::zero()) || !period.is_finite() {
            return Err(TtfError::BadPeriod(period.to_f64().unwrap_or(f64::NAN)));
        }
        if points.is_empty() {
            return Err(TtfError::Empty);
        }
        for (index, &(t, value)) in points.iter().enumerate() {
            if !(t >= T::zero() && t < period) {
                return Err(TtfError::OutOfRange {
                    index,
                    t: t.to_f64().unwrap_or(f64::NAN),
                });
            }
            if !(value > T::zero()) || !value.is_finite() {
                return Err(TtfError::NonPositive {
                    index,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
            if index > 0 && !(t > points[index - 1].0) {
                return Err(TtfError::NotIncreasing { index });
            }
        }
        let f = Self { period, points };
        for (segment, slope) in f.slopes().enumerate() {
            if slope < -T::one() - T::tolerance() {
                return Err(TtfError::NonFifo {
                    segment,
                    slope: slope.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(f)
    }

    /// A time-independent function.
    pub fn constant(period: T, value: T) -> Result<Self, TtfError> {
        Self::new(period, vec![(T::zero(), value)])
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn breakpoints(&self) -> &[(T, T)] {
        &self.points
    }

    /// Slope of every linear piece, the wrap-around piece last.
    pub fn slopes(&self) -> impl Iterator<Item = T> + '_ {
        let n = self.points.len();
        (0..n).map(move |k| {
            let (t0, v0) = self.points[k];
            let (t1, v1) = if k + 1 < n {
                self.points[k + 1]
            } else {
                let (t, v) = self.points[0];
                (t + self.period, v)
            };
            (v1 - v0) / (t1 - t0)
        })
    }

    pub fn min_value(&self) -> T {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(T::infinity(), |a, b| a.min(b))
    }

    pub fn max_value(&self) -> T {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(T::neg_infinity(), |a, b| a.max(b))
    }

    pub fn is_constant(&self) -> bool {
        self.points.iter().all(|p| p.1 == self.points[0].1)
    }

    /// Travel time when entering the arc at absolute time `t`.
    pub fn eval(&self, t: T) -> T {
        if self.points.len() == 1 {
            return self.points[0].1;
        }
        let mut tr = t - self.period * (t / self.period).floor();
        if tr >= self.period || tr < T::zero() {
            tr = T::zero();
        }
        let idx = self.points.partition_point(|p| p.0 <= tr);
        let n = self.points.len();
        let (t0, v0, t1, v1) = if idx == 0 {
            let (tl, vl) = self.points[n - 1];
            let (tf, vf) = self.points[0];
            (tl - self.period, vl, tf, vf)
        } else if idx == n {
            let (tl, vl) = self.points[n - 1];
            let (tf, vf) = self.points[0];
            (tl, vl, tf + self.period, vf)
        } else {
            let (a, va) = self.points[idx - 1];
            let (b, vb) = self.points[idx];
            (a, va, b, vb)
        };
        let w = (tr - t0) / (t1 - t0);
        v0 + (v1 - v0) * w
    }

    /// Arrival time when entering at `t`; non-decreasing in `t`.
    pub fn arrival(&self, t: T) -> T {
        t + self.eval(t)
    }
}

/// Convenience evaluation used where a free function reads better.
pub fn evaluate_ttf<T: Scalar>(f: &TravelTimeFunction<T>, t: T) -> T {
    f.eval(t)
}
