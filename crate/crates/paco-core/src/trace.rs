//! Trace records and deterministic synthetic traces.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geo::{destination, haversine_m, GeoCoord};
use crate::storage::{ContextPoint, PointId, StoreError};

/// One location sample from a trace file or generator.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub lat: f64,
    pub lon: f64,
    pub t: i64,
    pub source_tag: String,
}

/// Stable sort by timestamp; equal timestamps keep input order.
pub fn sort_by_time(records: &mut [TraceRecord]) {
    records.sort_by_key(|r| r.t);
}

/// Converts time-ordered records to points with ids `first_id, first_id + 1, ...`.
pub fn to_points(records: &[TraceRecord], first_id: PointId) -> Result<Vec<ContextPoint>, StoreError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| ContextPoint::new(r.lon, r.lat, r.t, first_id + i as PointId))
        .collect()
}

/// Seeded random walk starting at `origin` at t = 0. Each step picks a
/// uniform bearing and a length uniform in `[0, step_m]`, and advances time
/// by exactly `step_t` seconds.
pub fn synthetic_walk(seed: u64, n: usize, step_m: f64, step_t: i64, origin: GeoCoord) -> Vec<TraceRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let (mut lon, mut lat) = (origin.lon(), origin.lat());
    for i in 0..n {
        if i > 0 {
            let bearing = rng.random_range(0.0..TAU);
            let len = if step_m > 0.0 { rng.random_range(0.0..=step_m) } else { 0.0 };
            (lon, lat) = destination(lon, lat, bearing, len);
        }
        out.push(TraceRecord {
            lat,
            lon,
            t: i as i64 * step_t,
            source_tag: String::from("walk"),
        });
    }
    out
}

/// Parameters for [`synthetic_fleet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetSpec {
    pub vehicles: usize,
    pub samples_per_vehicle: usize,
    pub center: GeoCoord,
    /// Radius of the service area in meters.
    pub radius_m: f64,
    /// Number of popular destinations; trips end at one of them with
    /// probability `hotspot_bias`, otherwise at a uniform location.
    pub hotspots: usize,
    pub hotspot_bias: f64,
    /// Sampling interval in seconds.
    pub sample_s: i64,
    pub speed_mps: (f64, f64),
    /// Epoch second of the first sample.
    pub start_t: i64,
}

impl FleetSpec {
    /// A dense downtown-sized taxi fleet sampled once a minute.
    pub fn taxi(center: GeoCoord, vehicles: usize, samples_per_vehicle: usize) -> Self {
        Self {
            vehicles,
            samples_per_vehicle,
            center,
            radius_m: 6000.0,
            hotspots: 12,
            hotspot_bias: 0.6,
            sample_s: 60,
            speed_mps: (4.0, 14.0),
            start_t: 1_211_018_404,
        }
    }
}

fn random_in_disc(rng: &mut ChaCha8Rng, center: GeoCoord, radius_m: f64) -> (f64, f64) {
    let r = radius_m * libm::sqrt(rng.random_range(0.0f64..1.0));
    destination(center.lon(), center.lat(), rng.random_range(0.0..TAU), r)
}

/// Seeded fleet of vehicles driving between destinations inside a disc,
/// sampled at a fixed interval with staggered clocks. Returns all samples
/// merged and sorted by time. Each record's tag names its vehicle.
pub fn synthetic_fleet(seed: u64, spec: &FleetSpec) -> Vec<TraceRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hotspots: Vec<(f64, f64)> = (0..spec.hotspots.max(1))
        .map(|_| random_in_disc(&mut rng, spec.center, spec.radius_m * 0.7))
        .collect();
    let mut out = Vec::with_capacity(spec.vehicles * spec.samples_per_vehicle);
    for v in 0..spec.vehicles {
        let tag = alloc::format!("vehicle-{v}");
        let mut pos = random_in_disc(&mut rng, spec.center, spec.radius_m);
        let mut goal = pos;
        let mut speed = spec.speed_mps.0;
        let mut t = spec.start_t + rng.random_range(0..spec.sample_s.max(1));
        for _ in 0..spec.samples_per_vehicle {
            out.push(TraceRecord {
                lat: pos.1,
                lon: pos.0,
                t,
                source_tag: tag.clone(),
            });
            let mut budget = speed * spec.sample_s as f64;
            while budget > 0.0 {
                let remaining = haversine_m(pos.0, pos.1, goal.0, goal.1);
                if remaining < 1.0 {
                    goal = if rng.random_bool(spec.hotspot_bias.clamp(0.0, 1.0)) {
                        let (lon, lat) = hotspots[rng.random_range(0..hotspots.len())];
                        // Drop-offs scatter around the hotspot.
                        random_in_disc(&mut rng, GeoCoord::new(lon, lat).expect("valid hotspot"), 300.0)
                    } else {
                        random_in_disc(&mut rng, spec.center, spec.radius_m)
                    };
                    speed = rng.random_range(spec.speed_mps.0..=spec.speed_mps.1);
                    budget = budget.min(speed * spec.sample_s as f64);
                    continue;
                }
                let step = budget.min(remaining);
                let bearing = initial_bearing(pos, goal);
                pos = destination(pos.0, pos.1, bearing, step);
                budget -= step;
            }
            t += spec.sample_s;
        }
    }
    sort_by_time(&mut out);
    out
}

fn initial_bearing(from: (f64, f64), to: (f64, f64)) -> f64 {
    let rad = core::f64::consts::PI / 180.0;
    let (phi1, phi2) = (from.1 * rad, to.1 * rad);
    let dl = (to.0 - from.0) * rad;
    let y = libm::sin(dl) * libm::cos(phi2);
    let x = libm::cos(phi1) * libm::sin(phi2) - libm::sin(phi1) * libm::cos(phi2) * libm::cos(dl);
    libm::atan2(y, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> GeoCoord {
        GeoCoord::new(127.36, 36.37).unwrap()
    }

    #[test]
    fn walk_sizes() {
        assert!(synthetic_walk(1, 0, 10.0, 30, origin()).is_empty());
        let one = synthetic_walk(1, 1, 10.0, 30, origin());
        assert_eq!(one.len(), 1);
        assert_eq!((one[0].lon, one[0].lat, one[0].t), (127.36, 36.37, 0));
    }

    #[test]
    fn walk_is_deterministic() {
        let a = synthetic_walk(42, 100, 25.0, 10, origin());
        let b = synthetic_walk(42, 100, 25.0, 10, origin());
        assert_eq!(a, b);
        assert_ne!(a, synthetic_walk(43, 100, 25.0, 10, origin()));
    }

    #[test]
    fn walk_steps_are_bounded() {
        let w = synthetic_walk(7, 500, 25.0, 10, origin());
        for pair in w.windows(2) {
            let d = haversine_m(pair[0].lon, pair[0].lat, pair[1].lon, pair[1].lat);
            assert!(d <= 25.0 + 1e-6, "{d}");
            assert_eq!(pair[1].t - pair[0].t, 10);
        }
    }

    #[test]
    fn to_points_assigns_sequential_ids() {
        let w = synthetic_walk(7, 5, 25.0, 10, origin());
        let pts = to_points(&w, 100).unwrap();
        assert_eq!(pts.iter().map(|p| p.id).collect::<Vec<_>>(), [100, 101, 102, 103, 104]);
        assert_eq!(pts[3].t, 30);
    }

    #[test]
    fn fleet_is_sorted_and_deterministic() {
        let spec = FleetSpec::taxi(GeoCoord::new(-122.42, 37.77).unwrap(), 20, 50);
        let a = synthetic_fleet(9, &spec);
        assert_eq!(a.len(), 1000);
        assert!(a.windows(2).all(|w| w[0].t <= w[1].t));
        assert_eq!(a, synthetic_fleet(9, &spec));
        for r in &a {
            assert!(haversine_m(r.lon, r.lat, -122.42, 37.77) <= 6000.0 + 1.0);
        }
    }
}
