//! Access profiles: per-client limits applied to queries before they reach
//! the store.
//!
//! A profile clamps the grid factor (coarser grids blur what a window PoK
//! reveals), refuses windows narrower than a multiple of the influence
//! range on any bounded axis, and gates find-path queries by age.

use alloc::string::String;
use core::fmt;

use thiserror::Error;

use crate::api::QueryOverrides;
use crate::pok::{PacoConfig, QueryWindow};
use crate::storage::StPoint;

/// One day in seconds.
pub const DAY_S: u64 = 86_400;

/// Relative slack on the minimum-window comparison, so a window built to
/// exactly the minimum size survives degree/meter round trips.
const SPAN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindPathPolicy {
    Allowed,
    /// Both endpoints must be at least this many seconds old.
    MinAge(u64),
    Forbidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Longitude,
    Latitude,
    Time,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Longitude => "longitude",
            Axis::Latitude => "latitude",
            Axis::Time => "time",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("window too small on the {axis} axis: {actual_span} < required {required_span}")]
    WindowTooSmall {
        axis: Axis,
        required_span: f64,
        actual_span: f64,
    },
    #[error("find path is not permitted for this profile")]
    FindPathForbidden,
    #[error("find path endpoints must not be newer than t = {newest_allowed}")]
    FindPathTooRecent { newest_allowed: f64 },
    #[error("invalid profile: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccessProfile {
    pub name: String,
    pub grid_factor_min: f64,
    pub grid_factor_max: f64,
    /// Minimum window span as a multiple of the axis range; 0 disables it.
    pub min_window_multiple: f64,
    pub find_path: FindPathPolicy,
}

impl AccessProfile {
    pub fn new(
        name: impl Into<String>,
        grid_factor_min: f64,
        grid_factor_max: f64,
        min_window_multiple: f64,
        find_path: FindPathPolicy,
    ) -> Result<Self, ProfileError> {
        if grid_factor_min.is_nan() || grid_factor_min <= 0.0 || !grid_factor_max.is_finite() || grid_factor_min > grid_factor_max {
            return Err(ProfileError::Invalid("grid factor range must satisfy 0 < min <= max"));
        }
        if !min_window_multiple.is_finite() || min_window_multiple < 0.0 {
            return Err(ProfileError::Invalid("min window multiple must be non-negative"));
        }
        Ok(Self {
            name: name.into(),
            grid_factor_min,
            grid_factor_max,
            min_window_multiple,
            find_path,
        })
    }

    /// Full access for trusted local applications.
    pub fn open() -> Self {
        Self::new("open", 0.5, 2.0, 0.0, FindPathPolicy::Allowed).expect("valid built-in")
    }

    /// Middle ground for nearby devices.
    pub fn guarded() -> Self {
        Self::new("guarded", 0.5, 1.0, 5.0, FindPathPolicy::MinAge(DAY_S)).expect("valid built-in")
    }

    /// Lossy access for public servers and unknown peers.
    pub fn restricted() -> Self {
        Self::new("restricted", 0.5, 0.5, 20.0, FindPathPolicy::Forbidden).expect("valid built-in")
    }

    pub fn clamp_grid_factor(&self, gf: f64) -> f64 {
        gf.clamp(self.grid_factor_min, self.grid_factor_max)
    }

    /// Clamps the grid factor into range and refuses windows below the
    /// minimum size. Windows are never enlarged.
    pub fn sanitize_window_query(
        &self,
        win: &QueryWindow,
        overrides: &QueryOverrides,
        cfg: &PacoConfig,
    ) -> Result<(QueryWindow, QueryOverrides), ProfileError> {
        if self.min_window_multiple > 0.0 {
            let need_space = self.min_window_multiple * cfg.space_range;
            let need_time = self.min_window_multiple * cfg.time_range;
            if let Some(space) = &win.space {
                check_span(Axis::Longitude, space.lon_span_m(), need_space)?;
                check_span(Axis::Latitude, space.lat_span_m(), need_space)?;
            }
            if let Some((t0, t1)) = win.time {
                check_span(Axis::Time, t1 - t0, need_time)?;
            }
        }
        let mut sanitized = *overrides;
        let requested = overrides.grid_factor.unwrap_or(cfg.grid_factor);
        let clamped = self.clamp_grid_factor(requested);
        if clamped != requested || overrides.grid_factor.is_some() {
            sanitized.grid_factor = Some(clamped);
        }
        Ok((*win, sanitized))
    }

    /// Permits a find-path query between `a` and `b` at time `now`.
    pub fn sanitize_find_path(&self, a: &StPoint, b: &StPoint, now: f64) -> Result<(), ProfileError> {
        match self.find_path {
            FindPathPolicy::Allowed => Ok(()),
            FindPathPolicy::Forbidden => Err(ProfileError::FindPathForbidden),
            FindPathPolicy::MinAge(age) => {
                let newest_allowed = now - age as f64;
                if a.t.max(b.t) <= newest_allowed {
                    Ok(())
                } else {
                    Err(ProfileError::FindPathTooRecent { newest_allowed })
                }
            }
        }
    }
}

fn check_span(axis: Axis, actual_span: f64, required_span: f64) -> Result<(), ProfileError> {
    if actual_span < required_span * (1.0 - SPAN_TOLERANCE) {
        Err(ProfileError::WindowTooSmall {
            axis,
            required_span,
            actual_span,
        })
    } else {
        Ok(())
    }
}

/// `[open, guarded, restricted]`.
pub fn builtin_profiles() -> [AccessProfile; 3] {
    [AccessProfile::open(), AccessProfile::guarded(), AccessProfile::restricted()]
}

/// Looks up a built-in profile by name.
pub fn builtin(name: &str) -> Option<AccessProfile> {
    builtin_profiles().into_iter().find(|p| p.name == name)
}
