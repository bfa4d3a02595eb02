//! Trace replay and benchmark suites.
//!
//! Report rows share one schema:
//!
//! ```text
//! suite,config,kept,total,bytes,mean_pok,pok_retention,median_ms
//! ```
//!
//! `bytes` is the size of the persisted store. `mean_pok` is the mean window
//! PoK over the suite's windows and `pok_retention` divides it by the same
//! metric on the full-insert store. `median_ms` is the median over five timed
//! passes (after three discarded warm-up passes) of the per-window query time.

use std::io::Write;
use std::time::Instant;

use paco_core::geo::{flat_box, meters_to_lat_deg, meters_to_lon_deg, GeoCoord};
use paco_core::{
    ContextPoint, FlatTable, GeoBox, Paco, PacoConfig, PacoError, QueryOverrides, QueryWindow, RTree,
    ReferenceMode, StBox, StoreBackend,
};
use serde::Serialize;

use crate::persist;

pub const REPORT_HEADER: &str = "suite,config,kept,total,bytes,mean_pok,pok_retention,median_ms";
pub const WARMUP_RUNS: usize = 3;
pub const TIMED_RUNS: usize = 5;

/// Table 1 parameters plus the fixed query window size used for a data set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dataset {
    pub name: &'static str,
    pub cfg: PacoConfig,
    /// Side of the square query window in meters.
    pub query_side_m: f64,
    /// Length of the query window in seconds.
    pub query_span_s: f64,
}

impl Dataset {
    pub fn cabs() -> Self {
        Self {
            name: "cabs",
            cfg: PacoConfig::cabs(),
            query_side_m: 10_000.0,
            query_span_s: 7.0 * 86_400.0,
        }
    }

    pub fn peds() -> Self {
        Self {
            name: "peds",
            cfg: PacoConfig::peds(),
            query_side_m: 500.0,
            query_span_s: 10.0 * 3600.0,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "cabs" => Some(Self::cabs()),
            "peds" => Some(Self::peds()),
            _ => None,
        }
    }

    /// The fixed query window: centered on the data's spatial extent and
    /// starting at its first timestamp.
    pub fn query_window(&self, extent: &StBox) -> QueryWindow {
        QueryWindow {
            space: Some(flat_box(extent.space.center(), self.query_side_m / 2.0)),
            time: Some((extent.t_min, extent.t_min + self.query_span_s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub suite: String,
    pub config: String,
    pub kept: usize,
    pub total: usize,
    pub bytes: usize,
    pub mean_pok: f64,
    pub pok_retention: f64,
    pub median_ms: f64,
}

pub fn write_report<W: Write>(rows: &[BenchRow], w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wtr.write_record(REPORT_HEADER.split(','))?;
    }
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Replays `points` in order. `None` inserts everything; `Some(th)` smart
/// inserts with threshold `th`.
pub fn replay<S: StoreBackend + Default>(
    points: &[ContextPoint],
    cfg: &PacoConfig,
    ins_thresh: Option<f64>,
) -> Result<Paco<S>, PacoError> {
    let mut paco = Paco::new(S::default(), *cfg)?;
    for p in points {
        match ins_thresh {
            None => paco.insert(*p)?,
            Some(th) => {
                paco.smart_insert_with(*p, th)?;
            }
        }
    }
    Ok(paco)
}

/// Range-sized windows tiling the extent of `full`, keeping the tiles that
/// contain at least one of its points. Tiles are `space_range` meters on a
/// side (at the extent's center latitude) and `time_range` seconds long.
pub fn evaluation_windows<S: StoreBackend>(full: &S, cfg: &PacoConfig) -> Vec<QueryWindow> {
    let Some(ext) = full.extent() else {
        return Vec::new();
    };
    let center_lat = ext.space.center().lat();
    let dlon = meters_to_lon_deg(cfg.space_range, center_lat);
    let dlat = meters_to_lat_deg(cfg.space_range);
    let dt = cfg.time_range;
    let count = |span: f64, edge: f64| ((span / edge).floor() as usize) + 1;
    let (lon0, lat0) = (ext.space.min.lon(), ext.space.min.lat());
    let nx = count(ext.space.max.lon() - lon0, dlon);
    let ny = count(ext.space.max.lat() - lat0, dlat);
    let nt = count(ext.t_max - ext.t_min, dt);
    let mut out = Vec::new();
    for k in 0..nt {
        let t0 = ext.t_min + k as f64 * dt;
        for j in 0..ny {
            let la0 = lat0 + j as f64 * dlat;
            for i in 0..nx {
                let lo0 = lon0 + i as f64 * dlon;
                let Ok(space) = GeoBox::from_bounds(lo0, la0, (lo0 + dlon).min(180.0), (la0 + dlat).min(90.0)) else {
                    continue;
                };
                let tile = StBox {
                    space,
                    t_min: t0,
                    t_max: t0 + dt,
                };
                if !full.range_query(&tile).is_empty() {
                    out.push(QueryWindow {
                        space: Some(space),
                        time: Some((t0, t0 + dt)),
                    });
                }
            }
        }
    }
    out
}

pub fn mean_window_pok<S: StoreBackend>(
    paco: &Paco<S>,
    windows: &[QueryWindow],
    overrides: &QueryOverrides,
) -> Result<f64, PacoError> {
    if windows.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for w in windows {
        sum += paco.window_pok(w, overrides)?.pok;
    }
    Ok(sum / windows.len() as f64)
}

/// `replayed / full`; 1 when both are zero.
pub fn pok_retention(replayed: f64, full: f64) -> f64 {
    if full == 0.0 {
        if replayed == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        replayed / full
    }
}

/// Median wall time of `f` in milliseconds divided by `per`, after warm-up.
pub fn median_ms<F: FnMut()>(mut f: F, per: usize) -> f64 {
    for _ in 0..WARMUP_RUNS {
        f();
    }
    let mut times: Vec<f64> = (0..TIMED_RUNS)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[TIMED_RUNS / 2] / per.max(1) as f64
}

fn time_windows<S: StoreBackend>(paco: &Paco<S>, windows: &[QueryWindow], overrides: &QueryOverrides) -> f64 {
    median_ms(
        || {
            for w in windows {
                std::hint::black_box(paco.window_pok(w, overrides).ok());
            }
        },
        windows.len(),
    )
}

pub const SWEEP_THRESHOLDS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Smart-insert replay at each threshold against the full-insert baseline.
/// The first row is the baseline (`config = full`).
pub fn insthresh_sweep(points: &[ContextPoint], cfg: &PacoConfig, thresholds: &[f64]) -> Result<Vec<BenchRow>, PacoError> {
    let none = QueryOverrides::default();
    let full = replay::<RTree>(points, cfg, None)?;
    let windows = evaluation_windows(full.store(), cfg);
    let full_pok = mean_window_pok(&full, &windows, &none)?;
    let row = |config: String, paco: &Paco<RTree>, mean_pok: f64| BenchRow {
        suite: "insthresh-sweep".into(),
        config,
        kept: paco.store().len(),
        total: points.len(),
        bytes: persist::encode(paco.store()).len(),
        mean_pok,
        pok_retention: pok_retention(mean_pok, full_pok),
        median_ms: time_windows(paco, &windows, &none),
    };
    let mut rows = vec![row("full".into(), &full, full_pok)];
    for &th in thresholds {
        let paco = replay::<RTree>(points, cfg, Some(th))?;
        let mean = mean_window_pok(&paco, &windows, &none)?;
        rows.push(row(format!("ins={th:.2}"), &paco, mean));
    }
    Ok(rows)
}

/// Storage backend and reference-set combinations on the data set's fixed
/// query window: R-tree or flat table, each with the k-d reference tree or
/// querying the store per sub-cube, plus R-tree with the reference tree over
/// a smart-insert (0.8) store.
pub fn backend_compare(points: &[ContextPoint], ds: &Dataset) -> Result<Vec<BenchRow>, PacoError> {
    let rtree = replay::<RTree>(points, &ds.cfg, None)?;
    let table = replay::<FlatTable>(points, &ds.cfg, None)?;
    let smart = replay::<RTree>(points, &ds.cfg, Some(0.8))?;
    let Some(ext) = rtree.store().extent() else {
        return Ok(Vec::new());
    };
    let win = [ds.query_window(&ext)];
    let with = |mode| QueryOverrides {
        reference: Some(mode),
        ..Default::default()
    };
    let baseline = rtree.window_pok(&win[0], &with(ReferenceMode::KdTree))?.pok;
    let mut rows = Vec::new();
    let mut push = |config: &str, paco_pok: f64, kept: usize, bytes: usize, ms: f64| {
        rows.push(BenchRow {
            suite: "backend-compare".into(),
            config: config.into(),
            kept,
            total: points.len(),
            bytes,
            mean_pok: paco_pok,
            pok_retention: pok_retention(paco_pok, baseline),
            median_ms: ms,
        });
    };
    let rtree_bytes = persist::encode(rtree.store()).len();
    for (name, mode) in [("rtree+reftree", ReferenceMode::KdTree), ("rtree+direct", ReferenceMode::Direct)] {
        let o = with(mode);
        push(name, rtree.window_pok(&win[0], &o)?.pok, rtree.store().len(), rtree_bytes, time_windows(&rtree, &win, &o));
    }
    let table_bytes = persist::encode(table.store()).len();
    for (name, mode) in [("table+reftree", ReferenceMode::KdTree), ("table+direct", ReferenceMode::Direct)] {
        let o = with(mode);
        push(name, table.window_pok(&win[0], &o)?.pok, table.store().len(), table_bytes, time_windows(&table, &win, &o));
    }
    let o = with(ReferenceMode::KdTree);
    push(
        "rtree+reftree+smart0.8",
        smart.window_pok(&win[0], &o)?.pok,
        smart.store().len(),
        persist::encode(smart.store()).len(),
        time_windows(&smart, &win, &o),
    );
    Ok(rows)
}

pub const SWEEP_GRID_FACTORS: [f64; 3] = [0.5, 1.0, 2.0];

/// Window PoK on the fixed query window at each grid factor. The config
/// column carries the sub-cube count, e.g. `gf=1;t_p=300`.
pub fn gridfactor_sweep(points: &[ContextPoint], ds: &Dataset) -> Result<Vec<BenchRow>, PacoError> {
    let full = replay::<RTree>(points, &ds.cfg, None)?;
    let Some(ext) = full.store().extent() else {
        return Ok(Vec::new());
    };
    let win = [ds.query_window(&ext)];
    let base = full.window_pok(&win[0], &QueryOverrides::default())?.pok;
    let bytes = persist::encode(full.store()).len();
    let mut rows = Vec::new();
    for gf in SWEEP_GRID_FACTORS {
        let o = QueryOverrides {
            grid_factor: Some(gf),
            ..Default::default()
        };
        let r = full.window_pok(&win[0], &o)?;
        rows.push(BenchRow {
            suite: "gridfactor-sweep".into(),
            config: format!("gf={gf};t_p={}", r.t_p),
            kept: full.store().len(),
            total: points.len(),
            bytes,
            mean_pok: r.pok,
            pok_retention: pok_retention(r.pok, base),
            median_ms: time_windows(&full, &win, &o),
        });
    }
    Ok(rows)
}

/// Center used for synthetic benchmark data (downtown San Francisco).
pub fn synthetic_center() -> GeoCoord {
    GeoCoord::new(-122.4194, 37.7749).expect("valid constant")
}

#[cfg(test)]
mod tests {
    use super::*;
    use paco_core::trace::{synthetic_fleet, to_points, FleetSpec};

    fn fleet(vehicles: usize, samples: usize) -> Vec<ContextPoint> {
        let spec = FleetSpec::taxi(synthetic_center(), vehicles, samples);
        to_points(&synthetic_fleet(3, &spec), 0).unwrap()
    }

    #[test]
    fn evaluation_windows_cover_every_point() {
        let pts = fleet(10, 60);
        let cfg = PacoConfig::cabs();
        let full = replay::<RTree>(&pts, &cfg, None).unwrap();
        let wins = evaluation_windows(full.store(), &cfg);
        assert!(!wins.is_empty());
        for p in &pts {
            assert!(wins.iter().any(|w| {
                let (t0, t1) = w.time.unwrap();
                w.space.unwrap().contains(p.x, p.y) && (t0..=t1).contains(&(p.t as f64))
            }));
        }
        assert!(evaluation_windows(&RTree::new(), &cfg).is_empty());
    }

    #[test]
    fn replay_threshold_above_one_keeps_all() {
        let pts = fleet(5, 40);
        let p = replay::<RTree>(&pts, &PacoConfig::cabs(), Some(1.01)).unwrap();
        assert_eq!(p.store().len(), pts.len());
    }

    #[test]
    fn retention_edge_cases() {
        assert_eq!(pok_retention(0.0, 0.0), 1.0);
        assert_eq!(pok_retention(0.4, 0.8), 0.5);
    }

    #[test]
    fn report_header_matches_schema() {
        let mut buf = Vec::new();
        write_report(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{REPORT_HEADER}\n"));
        let row = BenchRow {
            suite: "s".into(),
            config: "c".into(),
            kept: 1,
            total: 2,
            bytes: 3,
            mean_pok: 0.5,
            pok_retention: 1.0,
            median_ms: 0.25,
        };
        let mut buf = Vec::new();
        write_report(&[row], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{REPORT_HEADER}\ns,c,1,2,3,0.5,1.0,0.25\n"));
    }

    #[test]
    fn backend_compare_non_smart_rows_agree() {
        let pts = fleet(8, 50);
        let rows = backend_compare(&pts, &Dataset::cabs()).unwrap();
        assert_eq!(rows.len(), 5);
        for r in &rows[1..4] {
            assert_eq!(r.mean_pok, rows[0].mean_pok, "{}", r.config);
        }
        assert!(rows[4].kept <= rows[4].total);
    }

    #[test]
    fn gridfactor_rows() {
        let pts = fleet(5, 30);
        let rows = gridfactor_sweep(&pts, &Dataset::cabs()).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].config.starts_with("gf=0.5;t_p="));
    }
}
