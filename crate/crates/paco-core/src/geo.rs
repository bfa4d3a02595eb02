//! Spherical-earth distance and degree/meter conversions.
//!
//! Points are stored in degrees; every distance crossing this module's
//! boundary is in meters.

use core::f64::consts::PI;

use thiserror::Error;

use crate::math;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Length of one degree of latitude (and of longitude at the equator).
pub const METERS_PER_DEGREE: f64 = PI * EARTH_RADIUS_M / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("box minimum exceeds maximum on the {0} axis")]
    InvertedBox(&'static str),
}

/// A longitude/latitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoCoord {
    lon: f64,
    lat: f64,
}

impl GeoCoord {
    /// Validates and normalizes a coordinate. Longitude 180 maps to -180.
    pub fn new(lon: f64, lat: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Latitude(lat));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Longitude(lon));
        }
        let lon = if lon == 180.0 { -180.0 } else { lon };
        Ok(Self { lon, lat })
    }

    #[inline]
    pub fn lon(&self) -> f64 {
        self.lon
    }

    #[inline]
    pub fn lat(&self) -> f64 {
        self.lat
    }
}

/// Wraps any finite longitude into [-180, 180).
pub fn normalize_lon(lon: f64) -> f64 {
    let wrapped = lon - 360.0 * math::floor((lon + 180.0) / 360.0);
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

#[inline]
fn to_rad(deg: f64) -> f64 {
    deg * PI / 180.0
}

#[inline]
fn to_deg(rad: f64) -> f64 {
    rad * 180.0 / PI
}

/// Great-circle distance in meters between two raw `(lon, lat)` pairs.
pub fn haversine_m(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
    let phi1 = to_rad(lat1);
    let phi2 = to_rad(lat2);
    let dphi = phi2 - phi1;
    let dlambda = to_rad(lon2 - lon1);
    let s_phi = math::sin(dphi / 2.0);
    let s_lambda = math::sin(dlambda / 2.0);
    let h = s_phi * s_phi + math::cos(phi1) * math::cos(phi2) * s_lambda * s_lambda;
    let h = h.clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_M * math::asin(math::sqrt(h))
}

/// Great-circle distance in meters.
pub fn haversine_distance(a: GeoCoord, b: GeoCoord) -> f64 {
    haversine_m(a.lon, a.lat, b.lon, b.lat)
}

/// Converts a north-south distance to degrees of latitude.
#[inline]
pub fn meters_to_lat_deg(meters: f64) -> f64 {
    meters / METERS_PER_DEGREE
}

/// Converts an east-west distance to degrees of longitude using the
/// local scale at `at_lat` (flat approximation, used for grid layout).
#[inline]
pub fn meters_to_lon_deg(meters: f64, at_lat: f64) -> f64 {
    let c = math::cos(to_rad(at_lat)).max(1e-12);
    meters / (METERS_PER_DEGREE * c)
}

/// Longitude half-span in degrees of the smallest band that contains every
/// point within `meters` of any point at latitude `lat`. `None` means the
/// cap touches a pole and the band is the whole circle.
fn cap_lon_half_span(meters: f64, lat: f64) -> Option<f64> {
    let angular = meters / EARTH_RADIUS_M;
    if angular >= PI / 2.0 {
        return None;
    }
    let s = math::sin(angular) / math::cos(to_rad(lat));
    if s.is_nan() || s >= 1.0 {
        return None;
    }
    Some(to_deg(math::asin(s)))
}

/// A non-wrapping longitude/latitude box with inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoBox {
    pub min: GeoCoord,
    pub max: GeoCoord,
}

impl GeoBox {
    pub fn new(min: GeoCoord, max: GeoCoord) -> Result<Self, GeoError> {
        if min.lat > max.lat {
            return Err(GeoError::InvertedBox("latitude"));
        }
        if min.lon > max.lon {
            return Err(GeoError::InvertedBox("longitude"));
        }
        Ok(Self { min, max })
    }

    /// Builds a box from raw bounds. Unlike [`GeoCoord::new`], a bound of
    /// longitude 180 is kept as is so a box can reach the antimeridian.
    pub fn from_bounds(
        lon_min: f64,
        lat_min: f64,
        lon_max: f64,
        lat_max: f64,
    ) -> Result<Self, GeoError> {
        for lat in [lat_min, lat_max] {
            if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
                return Err(GeoError::Latitude(lat));
            }
        }
        for lon in [lon_min, lon_max] {
            if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
                return Err(GeoError::Longitude(lon));
            }
        }
        Self::new(
            GeoCoord {
                lon: lon_min,
                lat: lat_min,
            },
            GeoCoord {
                lon: lon_max,
                lat: lat_max,
            },
        )
    }

    /// The whole globe.
    pub fn world() -> Self {
        Self {
            min: GeoCoord {
                lon: -180.0,
                lat: -90.0,
            },
            max: GeoCoord {
                lon: 180.0,
                lat: 90.0,
            },
        }
    }

    /// Degenerate box at a raw position (no longitude normalization).
    pub(crate) fn at(lon: f64, lat: f64) -> Self {
        let c = GeoCoord { lon, lat };
        Self { min: c, max: c }
    }

    #[inline]
    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        lon >= self.min.lon && lon <= self.max.lon && lat >= self.min.lat && lat <= self.max.lat
    }

    pub fn center(&self) -> GeoCoord {
        GeoCoord {
            lon: (self.min.lon + self.max.lon) / 2.0,
            lat: (self.min.lat + self.max.lat) / 2.0,
        }
    }

    /// North-south extent in meters.
    pub fn lat_span_m(&self) -> f64 {
        (self.max.lat - self.min.lat) * METERS_PER_DEGREE
    }

    /// East-west extent in meters, measured at the box's center latitude.
    pub fn lon_span_m(&self) -> f64 {
        let c = math::cos(to_rad(self.center().lat));
        (self.max.lon - self.min.lon) * METERS_PER_DEGREE * c
    }

    /// Smallest non-wrapping box containing every point within `meters` of
    /// any point of `self`. Longitudes are clamped at the antimeridian.
    pub fn inflate(&self, meters: f64) -> GeoBox {
        let meters = meters.max(0.0);
        let dlat = meters_to_lat_deg(meters);
        let lat_min = (self.min.lat - dlat).max(-90.0);
        let lat_max = (self.max.lat + dlat).min(90.0);
        let extreme = math::abs(self.min.lat).max(math::abs(self.max.lat));
        let reaches_pole = lat_min <= -90.0 || lat_max >= 90.0;
        let (lon_min, lon_max) = match cap_lon_half_span(meters, extreme) {
            Some(dlon) if !reaches_pole => (
                (self.min.lon - dlon).max(-180.0),
                (self.max.lon + dlon).min(180.0),
            ),
            _ => (-180.0, 180.0),
        };
        GeoBox {
            min: GeoCoord {
                lon: lon_min,
                lat: lat_min,
            },
            max: GeoCoord {
                lon: lon_max,
                lat: lat_max,
            },
        }
    }
}

/// Box whose edges are at least `half_extent` meters from `center`; every
/// point within `half_extent` of `center` lies inside it.
pub fn expand_box(center: GeoCoord, half_extent: f64) -> GeoBox {
    GeoBox {
        min: center,
        max: center,
    }
    .inflate(half_extent)
}

/// Box spanning `half_m` meters either side of `center` using the local flat
/// scale (the same conversion the window grid uses).
pub fn flat_box(center: GeoCoord, half_m: f64) -> GeoBox {
    let dlat = meters_to_lat_deg(half_m);
    let dlon = meters_to_lon_deg(half_m, center.lat);
    GeoBox {
        min: GeoCoord {
            lon: (center.lon - dlon).max(-180.0),
            lat: (center.lat - dlat).max(-90.0),
        },
        max: GeoCoord {
            lon: (center.lon + dlon).min(180.0),
            lat: (center.lat + dlat).min(90.0),
        },
    }
}

/// Point reached by travelling `meters` from `(lon, lat)` on initial
/// bearing `bearing_rad` (clockwise from north).
pub fn destination(lon: f64, lat: f64, bearing_rad: f64, meters: f64) -> (f64, f64) {
    let delta = meters / EARTH_RADIUS_M;
    let phi1 = to_rad(lat);
    let lambda1 = to_rad(lon);
    let sin_phi2 =
        math::sin(phi1) * math::cos(delta) + math::cos(phi1) * math::sin(delta) * math::cos(bearing_rad);
    let phi2 = math::asin(sin_phi2.clamp(-1.0, 1.0));
    let y = math::sin(bearing_rad) * math::sin(delta) * math::cos(phi1);
    let x = math::cos(delta) - math::sin(phi1) * sin_phi2;
    let lambda2 = lambda1 + math::atan2(y, x);
    (normalize_lon(to_deg(lambda2)), to_deg(phi2).clamp(-90.0, 90.0))
}

/// Lower bound on the great-circle distance from `(lon, lat)` to any point of
/// the box `[lon_min, lon_max] x [lat_min, lat_max]`.
pub(crate) fn min_distance_to_box(
    lon: f64,
    lat: f64,
    lon_min: f64,
    lat_min: f64,
    lon_max: f64,
    lat_max: f64,
) -> f64 {
    if lon >= lon_min && lon <= lon_max {
        let dlat = if lat < lat_min {
            lat_min - lat
        } else if lat > lat_max {
            lat - lat_max
        } else {
            0.0
        };
        return to_rad(dlat) * EARTH_RADIUS_M;
    }
    // Closest point lies on one of the two bounding meridians.
    let d_west = lon_diff(lon, lon_min);
    let d_east = lon_diff(lon, lon_max);
    let edge = if d_west <= d_east { lon_min } else { lon_max };
    let dlon = d_west.min(d_east);
    if dlon >= 90.0 {
        return 0.0;
    }
    // Foot of the perpendicular from the query onto the meridian's great
    // circle; distance along that circle is unimodal so clamping is exact.
    let foot = to_deg(math::atan(math::tan(to_rad(lat)) / math::cos(to_rad(dlon))));
    let foot = foot.clamp(lat_min, lat_max);
    haversine_m(lon, lat, edge, foot)
}

#[inline]
fn lon_diff(a: f64, b: f64) -> f64 {
    let d = math::abs(a - b) % 360.0;
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(lon: f64, lat: f64) -> GeoCoord {
        GeoCoord::new(lon, lat).unwrap()
    }

    #[test]
    fn identity_is_zero() {
        let a = c(-122.4, 37.7);
        assert_eq!(haversine_distance(a, a), 0.0);
    }

    #[test]
    fn one_degree_of_latitude() {
        // 2*pi*R/360
        let expected = 2.0 * PI * 6_371_000.0 / 360.0;
        assert!((expected - 111_194.9).abs() < 0.1);
        let d = haversine_distance(c(0.0, 0.0), c(0.0, 1.0));
        assert!((d - 111_194.9).abs() < 0.1, "{d}");
    }

    #[test]
    fn antipodal_on_equator() {
        let d = haversine_distance(c(0.0, 0.0), c(180.0, 0.0));
        assert!((d - 20_015_086.8).abs() < 1.0, "{d}");
    }

    #[test]
    fn rejects_bad_coordinates() {
        assert_eq!(GeoCoord::new(0.0, 91.0), Err(GeoError::Latitude(91.0)));
        assert_eq!(GeoCoord::new(-181.0, 0.0), Err(GeoError::Longitude(-181.0)));
        assert!(GeoCoord::new(f64::NAN, 0.0).is_err());
        assert_eq!(c(180.0, 0.0).lon(), -180.0);
    }

    #[test]
    fn inverted_box_is_rejected() {
        assert!(GeoBox::new(c(1.0, 0.0), c(0.0, 1.0)).is_err());
        assert!(GeoBox::new(c(0.0, 1.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn expand_zero_is_degenerate() {
        let center = c(12.5, -33.0);
        let b = expand_box(center, 0.0);
        assert_eq!(b.min, center);
        assert_eq!(b.max, center);
    }

    #[test]
    fn expand_one_degree_at_equator() {
        let b = expand_box(c(0.0, 0.0), METERS_PER_DEGREE);
        assert!((b.min.lat + 1.0).abs() < 1e-9);
        assert!((b.max.lat - 1.0).abs() < 1e-9);
    }

    #[test]
    fn expand_at_sixty_doubles_lon_span() {
        let d = 500.0;
        let eq = expand_box(c(0.0, 0.0), d);
        let north = expand_box(c(0.0, 60.0), d);
        let ratio = north.max.lon / eq.max.lon;
        assert!((ratio - 2.0).abs() < 1e-6, "{ratio}");
    }

    #[test]
    fn expand_near_pole_covers_all_longitudes() {
        let b = expand_box(c(10.0, 89.999), 1000.0);
        assert_eq!(b.min.lon, -180.0);
        assert_eq!(b.max.lon, 180.0);
        assert_eq!(b.max.lat, 90.0);
    }

    #[test]
    fn normalize_lon_wraps() {
        assert_eq!(normalize_lon(190.0), -170.0);
        assert_eq!(normalize_lon(-190.0), 170.0);
        assert_eq!(normalize_lon(180.0), -180.0);
        assert_eq!(normalize_lon(45.0), 45.0);
    }

    #[test]
    fn destination_travels_requested_distance() {
        let (lon, lat) = destination(-122.4, 37.7, 1.1, 750.0);
        let d = haversine_m(-122.4, 37.7, lon, lat);
        assert!((d - 750.0).abs() < 1e-6);
    }

    fn coord() -> impl Strategy<Value = GeoCoord> {
        (-180.0f64..180.0, -89.9f64..89.9).prop_map(|(lon, lat)| c(lon, lat))
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in coord(), b in coord(), m in coord()) {
            let ab = haversine_distance(a, b);
            let am = haversine_distance(a, m);
            let mb = haversine_distance(m, b);
            prop_assert!(ab <= (am + mb) * (1.0 + 1e-6) + 1e-6);
            prop_assert!((ab - haversine_distance(b, a)).abs() < 1e-6);
            prop_assert!(ab >= 0.0);
        }

        #[test]
        fn points_within_half_extent_are_in_box(
            lon in -170.0f64..170.0,
            lat in -80.0f64..80.0,
            h in 1.0f64..50_000.0,
            bearing in 0.0f64..(2.0 * PI),
            frac in 0.0f64..1.0,
        ) {
            let center = c(lon, lat);
            let b = expand_box(center, h);
            let (plon, plat) = destination(lon, lat, bearing, h * frac);
            prop_assert!(b.contains(plon, plat), "{plon},{plat} not in {b:?}");
        }

        #[test]
        fn box_corners_are_near(
            lon in -170.0f64..170.0,
            lat in -80.0f64..80.0,
            h in 1.0f64..50_000.0,
            fx in 0.0f64..=1.0,
            fy in 0.0f64..=1.0,
        ) {
            let center = c(lon, lat);
            let b = expand_box(center, h);
            let plon = b.min.lon + fx * (b.max.lon - b.min.lon);
            let plat = b.min.lat + fy * (b.max.lat - b.min.lat);
            let d = haversine_m(lon, lat, plon, plat);
            prop_assert!(d <= h * 2f64.sqrt() * (1.0 + 1e-3));
        }

        #[test]
        fn box_lower_bound_never_exceeds_true_distance(
            q in coord(),
            lon0 in -179.0f64..178.0,
            lat0 in -89.0f64..88.0,
            w in 0.0f64..1.0,
            hgt in 0.0f64..1.0,
            fx in 0.0f64..=1.0,
            fy in 0.0f64..=1.0,
        ) {
            let (lon1, lat1) = (lon0 + w, lat0 + hgt);
            let lb = min_distance_to_box(q.lon(), q.lat(), lon0, lat0, lon1, lat1);
            let plon = lon0 + fx * w;
            let plat = lat0 + fy * hgt;
            let d = haversine_m(q.lon(), q.lat(), plon, plat);
            prop_assert!(lb <= d * (1.0 + 1e-9) + 1e-6, "lb {lb} > d {d}");
        }
    }
}
