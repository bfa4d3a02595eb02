//! Probability-of-knowledge (PoK) computations.
//!
//! A stored point influences a reference location through two linear
//! decays, one over great-circle distance and one over time, each reaching
//! zero at its configured range. Several points combine through the
//! probability of their union (independent events), and a window's PoK is
//! the mean PoK over the centers of a grid of sub-cubes.

use alloc::vec::Vec;

use thiserror::Error;

use crate::geo::{self, haversine_m, GeoBox};
use crate::math;
use crate::refindex::RefTree;
use crate::storage::{ContextPoint, NormScale, StBox, StPoint, StoreBackend};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PokError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("window has no bounded axis")]
    Unbounded,
    #[error("window time interval [{0}, {1}] is inverted or not a number")]
    InvalidInterval(f64, f64),
    #[error("window axis is unbounded and the store is empty")]
    EmptyWindow,
}

/// Tunable parameters. Ranges are in meters and seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacoConfig {
    /// Distance at which a point's spatial influence reaches zero.
    pub space_range: f64,
    /// Duration at which a point's temporal influence reaches zero.
    pub time_range: f64,
    pub space_weight: f64,
    pub time_weight: f64,
    /// Sub-cubes per range along each axis.
    pub grid_factor: f64,
    /// Smart insert skips points whose local PoK is at least this value.
    pub ins_thresh: f64,
    /// Max number of candidates entering the union per sub-cube.
    pub trim_thresh: usize,
}

impl PacoConfig {
    /// Vehicle-trace parameters: 1000 m, 60 h.
    pub fn cabs() -> Self {
        Self {
            space_range: 1000.0,
            time_range: 60.0 * 3600.0,
            space_weight: 1.0,
            time_weight: 1.0,
            grid_factor: 1.0,
            ins_thresh: 0.8,
            trim_thresh: 10,
        }
    }

    /// Pedestrian-trace parameters: 50 m, 5 min.
    pub fn peds() -> Self {
        Self {
            space_range: 50.0,
            time_range: 300.0,
            ..Self::cabs()
        }
    }

    pub fn validate(&self) -> Result<(), PokError> {
        if !(self.space_range > 0.0 && self.space_range.is_finite()) {
            return Err(PokError::InvalidConfig("space_range must be positive"));
        }
        if !(self.time_range > 0.0 && self.time_range.is_finite()) {
            return Err(PokError::InvalidConfig("time_range must be positive"));
        }
        if !(0.0..=1.0).contains(&self.space_weight) || !(0.0..=1.0).contains(&self.time_weight) {
            return Err(PokError::InvalidConfig("weights must lie in [0, 1]"));
        }
        if !(self.grid_factor > 0.0 && self.grid_factor.is_finite()) {
            return Err(PokError::InvalidConfig("grid_factor must be positive"));
        }
        if self.ins_thresh.is_nan() || self.ins_thresh < 0.0 || self.ins_thresh.is_infinite() {
            return Err(PokError::InvalidConfig("ins_thresh must be non-negative"));
        }
        if self.trim_thresh == 0 {
            return Err(PokError::InvalidConfig("trim_thresh must be at least 1"));
        }
        Ok(())
    }

    pub fn scale(&self) -> NormScale {
        NormScale {
            space_range: self.space_range,
            time_range: self.time_range,
        }
    }
}

impl Default for PacoConfig {
    fn default() -> Self {
        Self::cabs()
    }
}

/// Spatiotemporal region for a window query. `None` on an axis means
/// unbounded; it is clamped to the stored data's extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryWindow {
    pub space: Option<GeoBox>,
    pub time: Option<(f64, f64)>,
}

impl QueryWindow {
    pub fn new(space: Option<GeoBox>, time: Option<(f64, f64)>) -> Result<Self, PokError> {
        if space.is_none() && time.is_none() {
            return Err(PokError::Unbounded);
        }
        if let Some((a, b)) = time {
            if a.is_nan() || b.is_nan() || a > b {
                return Err(PokError::InvalidInterval(a, b));
            }
        }
        Ok(Self { space, time })
    }

    pub fn bounded(space: GeoBox, t_min: f64, t_max: f64) -> Result<Self, PokError> {
        Self::new(Some(space), Some((t_min, t_max)))
    }

    pub fn spatial(space: GeoBox) -> Self {
        Self {
            space: Some(space),
            time: None,
        }
    }

    pub fn temporal(t_min: f64, t_max: f64) -> Result<Self, PokError> {
        Self::new(None, Some((t_min, t_max)))
    }

    /// Fills unbounded axes from `extent`.
    pub fn resolve(&self, extent: Option<StBox>) -> Result<StBox, PokError> {
        let space = match (self.space, extent) {
            (Some(s), _) => s,
            (None, Some(e)) => e.space,
            (None, None) => return Err(PokError::EmptyWindow),
        };
        let (t_min, t_max) = match (self.time, extent) {
            (Some(t), _) => t,
            (None, Some(e)) => (e.t_min, e.t_max),
            (None, None) => return Err(PokError::EmptyWindow),
        };
        Ok(StBox {
            space,
            t_min,
            t_max,
        })
    }
}

/// Window PoK plus diagnostics. `pok = t_o / t_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoKResult {
    pub pok: f64,
    /// Sum of sub-cube PoKs.
    pub t_o: f64,
    /// Number of sub-cubes (the maximum attainable `t_o`).
    pub t_p: usize,
    /// Points returned by the expanded pre-query.
    pub n_candidates: usize,
    pub n_subcubes: usize,
}

/// How sub-cube candidate lookups are served from the pre-query result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceMode {
    /// k-d reference tree built on the pre-query result.
    #[default]
    KdTree,
    /// Linear scan of the pre-query result.
    Linear,
    /// No pre-query; each sub-cube queries the store directly.
    Direct,
}

/// Spatial influence of a point `d` meters away.
#[inline]
pub fn influence_spatial(d: f64, cfg: &PacoConfig) -> f64 {
    (1.0 - d / cfg.space_range).max(0.0)
}

/// Temporal influence of a point `dt` seconds away.
#[inline]
pub fn influence_temporal(dt: f64, cfg: &PacoConfig) -> f64 {
    (1.0 - dt / cfg.time_range).max(0.0)
}

/// Influence of stored point `p` on reference location `r`.
pub fn pok_point(p: &ContextPoint, r: &StPoint, cfg: &PacoConfig) -> f64 {
    let d = haversine_m(p.x, p.y, r.x, r.y);
    let dt = math::abs(p.t as f64 - r.t);
    (influence_spatial(d, cfg) * cfg.space_weight) * (influence_temporal(dt, cfg) * cfg.time_weight)
}

/// Probability of the union of independent events, `1 - prod(1 - p_i)`.
pub fn pok_union(poks: &[f64]) -> f64 {
    1.0 - poks.iter().fold(1.0, |acc, p| acc * (1.0 - p))
}

/// The same union expanded term by term over all `2^n - 1` non-empty
/// subsets, each intersection being the product of its members.
/// Exponential in `poks.len()`; intended for short (trimmed) lists.
pub fn pok_union_inclusion_exclusion(poks: &[f64]) -> f64 {
    let n = poks.len();
    assert!(n < 31, "inclusion-exclusion over {n} terms is intractable");
    let mut total = 0.0;
    for mask in 1u32..(1u32 << n) {
        let mut prod = 1.0;
        for (i, p) in poks.iter().enumerate() {
            if mask & (1 << i) != 0 {
                prod *= p;
            }
        }
        if mask.count_ones() % 2 == 1 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// Point PoKs of the candidates that influence `target`: zeros dropped,
/// sorted descending (ties by ascending id), cut to `trim_thresh` values.
pub fn trimmed_influences(target: &StPoint, candidates: &[ContextPoint], cfg: &PacoConfig) -> Vec<f64> {
    let mut scored: Vec<(f64, u64)> = candidates
        .iter()
        .map(|c| (pok_point(c, target, cfg), c.id))
        .filter(|(v, _)| *v > 0.0)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.truncate(cfg.trim_thresh);
    scored.into_iter().map(|(v, _)| v).collect()
}

/// PoK of one sub-cube, evaluated at its target point.
pub fn subcube_pok(target: &StPoint, candidates: &[ContextPoint], cfg: &PacoConfig) -> f64 {
    pok_union(&trimmed_influences(target, candidates, cfg))
}

/// Box containing every location that can influence `target`.
pub fn influence_box(target: &StPoint, cfg: &PacoConfig) -> StBox {
    StBox {
        space: GeoBox::at(target.x, target.y).inflate(cfg.space_range),
        t_min: target.t - cfg.time_range,
        t_max: target.t + cfg.time_range,
    }
}

/// One axis of a sub-cube grid: `n` cells of width `edge` from `lo`,
/// the last one clipped at `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub edge: f64,
    pub n: usize,
}

impl GridAxis {
    fn new(lo: f64, hi: f64, edge: f64) -> Self {
        let span = hi - lo;
        // Tolerance so spans that are whole multiples of the edge do not
        // gain a sliver cell from rounding.
        let n = math::ceil(span / edge - 1e-9).max(1.0) as usize;
        Self { lo, hi, edge, n }
    }

    pub fn center(&self, i: usize) -> f64 {
        let a = self.lo + i as f64 * self.edge;
        let b = (a + self.edge).min(self.hi);
        (a + b) / 2.0
    }
}

/// Sub-cube decomposition of a resolved window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubcubeGrid {
    pub lon: GridAxis,
    pub lat: GridAxis,
    pub time: GridAxis,
}

impl SubcubeGrid {
    /// Cell edges are `space_range / grid_factor` meters (converted to
    /// degrees at the window's center latitude) and `time_range /
    /// grid_factor` seconds.
    pub fn new(window: &StBox, cfg: &PacoConfig) -> Self {
        let edge_m = cfg.space_range / cfg.grid_factor;
        let center_lat = window.space.center().lat();
        Self {
            lon: GridAxis::new(
                window.space.min.lon(),
                window.space.max.lon(),
                geo::meters_to_lon_deg(edge_m, center_lat),
            ),
            lat: GridAxis::new(
                window.space.min.lat(),
                window.space.max.lat(),
                geo::meters_to_lat_deg(edge_m),
            ),
            time: GridAxis::new(window.t_min, window.t_max, cfg.time_range / cfg.grid_factor),
        }
    }

    pub fn len(&self) -> usize {
        self.lon.n * self.lat.n * self.time.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of cell `(i, j, k)` along (lon, lat, time).
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.lat.n + j) * self.lon.n + i
    }

    pub fn target(&self, i: usize, j: usize, k: usize) -> StPoint {
        StPoint::new(self.lon.center(i), self.lat.center(j), self.time.center(k))
    }

    /// Targets in evaluation order (time outermost, longitude innermost).
    pub fn targets(&self) -> impl Iterator<Item = StPoint> + '_ {
        (0..self.time.n).flat_map(move |k| {
            (0..self.lat.n).flat_map(move |j| (0..self.lon.n).map(move |i| self.target(i, j, k)))
        })
    }
}

/// Per-sub-cube PoK values of one window evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CellValues {
    pub grid: SubcubeGrid,
    /// Indexed by [`SubcubeGrid::index`].
    pub values: Vec<f64>,
}

impl CellValues {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }
}

/// Window PoK using the k-d reference tree.
pub fn window_pok<S: StoreBackend + ?Sized>(
    win: &QueryWindow,
    store: &S,
    cfg: &PacoConfig,
) -> Result<PoKResult, PokError> {
    window_pok_with(win, store, cfg, ReferenceMode::KdTree)
}

pub fn window_pok_with<S: StoreBackend + ?Sized>(
    win: &QueryWindow,
    store: &S,
    cfg: &PacoConfig,
    mode: ReferenceMode,
) -> Result<PoKResult, PokError> {
    window_cells(win, store, cfg, mode).map(|(r, _)| r)
}

/// Evaluates every sub-cube of the window and returns the aggregate with
/// the individual cell values.
pub fn window_cells<S: StoreBackend + ?Sized>(
    win: &QueryWindow,
    store: &S,
    cfg: &PacoConfig,
    mode: ReferenceMode,
) -> Result<(PoKResult, CellValues), PokError> {
    cfg.validate()?;
    let window = win.resolve(store.extent())?;
    let grid = SubcubeGrid::new(&window, cfg);

    let expanded = StBox {
        space: window.space.inflate(cfg.space_range),
        t_min: window.t_min - cfg.time_range,
        t_max: window.t_max + cfg.time_range,
    };
    let (reference, n_candidates) = match mode {
        ReferenceMode::Direct => (Reference::Store, store.len()),
        ReferenceMode::Linear => {
            let pts = store.range_query(&expanded);
            let n = pts.len();
            (Reference::Linear(pts), n)
        }
        ReferenceMode::KdTree => {
            let pts = store.range_query(&expanded);
            let n = pts.len();
            (Reference::Tree(RefTree::build(pts)), n)
        }
    };

    let mut values = Vec::with_capacity(grid.len());
    let mut t_o = 0.0;
    let mut buf = Vec::new();
    for target in grid.targets() {
        let v = if n_candidates == 0 {
            0.0
        } else {
            let b = influence_box(&target, cfg);
            buf.clear();
            match &reference {
                Reference::Store => buf.extend(store.range_query(&b)),
                Reference::Linear(pts) => buf.extend(pts.iter().filter(|p| b.contains(p)).copied()),
                Reference::Tree(tree) => tree.range_into(&b, &mut buf),
            }
            subcube_pok(&target, &buf, cfg)
        };
        t_o += v;
        values.push(v);
    }
    let t_p = grid.len();
    let result = PoKResult {
        pok: t_o / t_p as f64,
        t_o,
        t_p,
        n_candidates,
        n_subcubes: t_p,
    };
    Ok((result, CellValues { grid, values }))
}

enum Reference {
    Store,
    Linear(Vec<ContextPoint>),
    Tree(RefTree),
}
