//! Spatiotemporal context store with probability-of-knowledge (PoK) queries.
//!
//! Points are `(lon, lat, t, id)` observations. The crate provides:
//!
//! - [`geo`]: haversine distance and meter/degree box conversions.
//! - [`storage`]: the point store contract with an R-tree and a flat-table backend.
//! - [`refindex`]: an immutable 3-d k-d tree used as a per-query reference set.
//! - [`pok`]: influence functions, the inclusion-exclusion union and window PoK.
//! - [`api`]: the facade with smart insert, window PoK and find path.
//! - [`profiles`]: access profiles that sanitize or reject client queries.
//! - [`trace`]: trace records and deterministic synthetic traces.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![forbid(unsafe_code)]
extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod api;
pub mod geo;
mod math;
pub mod pok;
pub mod profiles;
pub mod refindex;
pub mod storage;
pub mod trace;

pub use api::{InsertOutcome, Paco, PacoError, QueryOverrides};
pub use geo::{GeoBox, GeoCoord, GeoError};
pub use pok::{PacoConfig, PoKResult, QueryWindow, ReferenceMode};
pub use profiles::{AccessProfile, FindPathPolicy, ProfileError};
pub use refindex::RefTree;
pub use storage::{
    ContextPoint, FlatTable, NormScale, PointId, RTree, StBox, StPoint, StoreBackend, StoreError,
};
pub use trace::TraceRecord;
