//! The point store: `(x, y, t, id)` observations behind one backend contract.
//!
//! Two backends implement [`StoreBackend`]: an R-tree ([`RTree`]) and a flat
//! single table ([`FlatTable`]). They must be observationally equivalent;
//! they differ only in cost.

mod flat;
mod rtree;

use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::geo::{haversine_m, GeoBox, GeoCoord, GeoError};
use crate::math;

pub use flat::FlatTable;
pub use rtree::{RTree, MAX_FANOUT, MIN_FANOUT};

pub type PointId = u64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("point id {0} already stored")]
    DuplicateId(PointId),
    #[error("point id {0} not in store")]
    NotFound(PointId),
    #[error("invalid coordinate: {0}")]
    InvalidCoord(#[from] GeoError),
    #[error("negative timestamp {0}")]
    NegativeTime(i64),
    #[error("time interval [{0}, {1}] is inverted or not a number")]
    InvalidInterval(f64, f64),
}

/// One observation: longitude `x`, latitude `y` (degrees), time `t`
/// (seconds since epoch) and an opaque id used to join other context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextPoint {
    pub x: f64,
    pub y: f64,
    pub t: i64,
    pub id: PointId,
}

impl ContextPoint {
    pub fn new(lon: f64, lat: f64, t: i64, id: PointId) -> Result<Self, StoreError> {
        let c = GeoCoord::new(lon, lat)?;
        if t < 0 {
            return Err(StoreError::NegativeTime(t));
        }
        Ok(Self {
            x: c.lon(),
            y: c.lat(),
            t,
            id,
        })
    }

    #[inline]
    pub fn position(&self) -> StPoint {
        StPoint {
            x: self.x,
            y: self.y,
            t: self.t as f64,
        }
    }

    /// Ascending `(t, id)` order.
    pub fn time_order(a: &Self, b: &Self) -> Ordering {
        a.t.cmp(&b.t).then(a.id.cmp(&b.id))
    }
}

/// A query location in space and time. Time is fractional so grid-cell
/// centers can be represented exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl StPoint {
    pub fn new(lon: f64, lat: f64, t: f64) -> Self {
        Self { x: lon, y: lat, t }
    }
}

/// Spatiotemporal box with inclusive bounds on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StBox {
    pub space: GeoBox,
    pub t_min: f64,
    pub t_max: f64,
}

impl StBox {
    pub fn new(space: GeoBox, t_min: f64, t_max: f64) -> Result<Self, StoreError> {
        if t_min.is_nan() || t_max.is_nan() || t_min > t_max {
            return Err(StoreError::InvalidInterval(t_min, t_max));
        }
        Ok(Self {
            space,
            t_min,
            t_max,
        })
    }

    /// Every place, every time.
    pub fn everything() -> Self {
        Self {
            space: GeoBox::world(),
            t_min: f64::NEG_INFINITY,
            t_max: f64::INFINITY,
        }
    }

    /// All places within the time interval.
    pub fn time_slice(t_min: f64, t_max: f64) -> Result<Self, StoreError> {
        Self::new(GeoBox::world(), t_min, t_max)
    }

    #[inline]
    pub fn contains(&self, p: &ContextPoint) -> bool {
        let t = p.t as f64;
        self.space.contains(p.x, p.y) && t >= self.t_min && t <= self.t_max
    }
}

/// Unit scales for the normalized space-time distance used by nearest
/// neighbor: meters are divided by `space_range`, seconds by `time_range`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormScale {
    pub space_range: f64,
    pub time_range: f64,
}

impl NormScale {
    /// `sqrt((d_s / space_range)^2 + (|dt| / time_range)^2)`.
    pub fn distance(&self, p: &ContextPoint, q: &StPoint) -> f64 {
        let ds = haversine_m(p.x, p.y, q.x, q.y) / self.space_range;
        let dt = math::abs(p.t as f64 - q.t) / self.time_range;
        math::sqrt(ds * ds + dt * dt)
    }

    #[inline]
    pub(crate) fn combine(&self, space_m: f64, time_s: f64) -> f64 {
        let ds = space_m / self.space_range;
        let dt = time_s / self.time_range;
        math::sqrt(ds * ds + dt * dt)
    }
}

/// `(distance, id)` ordering used to break nearest-neighbor ties.
#[inline]
pub(crate) fn closer(d: f64, id: PointId, best: Option<(f64, PointId)>) -> bool {
    match best {
        None => true,
        Some((bd, bid)) => d < bd || (d == bd && id < bid),
    }
}

/// Storage contract shared by every backend.
///
/// Single writer: `insert` takes `&mut self`, queries take `&self`, so a
/// query can never observe a half-applied insert.
pub trait StoreBackend {
    /// Stores `p`. Ids are unique per store.
    fn insert(&mut self, p: ContextPoint) -> Result<(), StoreError>;

    /// Every stored point inside `b` (inclusive bounds), in no particular order.
    fn range_query(&self, b: &StBox) -> Vec<ContextPoint>;

    /// Stored point minimizing [`NormScale::distance`] to `q`, lowest id on ties.
    fn nearest_neighbor(&self, q: &StPoint, scale: &NormScale) -> Option<ContextPoint>;

    fn get(&self, id: PointId) -> Option<ContextPoint>;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bounding box of the stored data, `None` when empty.
    fn extent(&self) -> Option<StBox>;

    /// All points sorted by id.
    fn points(&self) -> Vec<ContextPoint>;

    /// Points with `t` between the two endpoints' times, in ascending
    /// `(t, id)` order, starting with the earlier endpoint and ending with
    /// the later one (`first` leads when both share a timestamp).
    fn get_sequence(
        &self,
        first: &ContextPoint,
        second: &ContextPoint,
    ) -> Result<Vec<ContextPoint>, StoreError> {
        for p in [first, second] {
            match self.get(p.id) {
                Some(stored) if stored == *p => {}
                _ => return Err(StoreError::NotFound(p.id)),
            }
        }
        if first.id == second.id {
            return Ok(alloc::vec![*first]);
        }
        let (start, end) = if second.t < first.t {
            (second, first)
        } else {
            (first, second)
        };
        let slice = StBox::time_slice(start.t as f64, end.t as f64)?;
        let mut seq = self.range_query(&slice);
        let rank = |p: &ContextPoint| -> u8 {
            if p.id == start.id {
                0
            } else if p.id == end.id {
                2
            } else {
                1
            }
        };
        seq.sort_by(|a, b| {
            a.t.cmp(&b.t)
                .then(rank(a).cmp(&rank(b)))
                .then(a.id.cmp(&b.id))
        });
        Ok(seq)
    }
}

/// Linear-scan nearest neighbor shared by the flat table and tests.
pub(crate) fn scan_nearest<'a, I>(points: I, q: &StPoint, scale: &NormScale) -> Option<ContextPoint>
where
    I: IntoIterator<Item = &'a ContextPoint>,
{
    let mut best: Option<(f64, PointId)> = None;
    let mut found = None;
    for p in points {
        let d = scale.distance(p, q);
        if closer(d, p.id, best) {
            best = Some((d, p.id));
            found = Some(*p);
        }
    }
    found
}

#[cfg(test)]
mod tests;
