//! The store facade: smart insert, window PoK and find path.

use alloc::vec::Vec;

use thiserror::Error;

use crate::geo::{self, GeoCoord};
use crate::pok::{self, PacoConfig, PoKResult, PokError, QueryWindow, ReferenceMode};
use crate::storage::{ContextPoint, StBox, StPoint, StoreBackend, StoreError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PacoError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Pok(#[from] PokError),
    #[error("store is empty")]
    EmptyStore,
}

/// Result of a smart insert. `inserted` holds exactly when
/// `measured_pok < threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsertOutcome {
    pub inserted: bool,
    pub measured_pok: f64,
    pub threshold: f64,
}

/// Per-call parameter overlay. Ranges are deliberately absent: they can only
/// change through [`Paco::reconfigure_ranges`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QueryOverrides {
    pub grid_factor: Option<f64>,
    pub trim_thresh: Option<usize>,
    pub space_weight: Option<f64>,
    pub time_weight: Option<f64>,
    pub reference: Option<ReferenceMode>,
}

impl QueryOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply(&self, base: &PacoConfig) -> PacoConfig {
        PacoConfig {
            grid_factor: self.grid_factor.unwrap_or(base.grid_factor),
            trim_thresh: self.trim_thresh.unwrap_or(base.trim_thresh),
            space_weight: self.space_weight.unwrap_or(base.space_weight),
            time_weight: self.time_weight.unwrap_or(base.time_weight),
            ..*base
        }
    }
}

/// Record of a store-level range change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeChange {
    pub old_space_range: f64,
    pub old_time_range: f64,
    pub new_space_range: f64,
    pub new_time_range: f64,
    /// Store size when the change happened.
    pub at_len: usize,
}

/// A point store with its default configuration.
#[derive(Debug, Clone)]
pub struct Paco<S> {
    store: S,
    cfg: PacoConfig,
    rejected: u64,
    range_log: Vec<RangeChange>,
}

impl<S: StoreBackend> Paco<S> {
    pub fn new(store: S, cfg: PacoConfig) -> Result<Self, PacoError> {
        cfg.validate()?;
        Ok(Self {
            store,
            cfg,
            rejected: 0,
            range_log: Vec::new(),
        })
    }

    pub fn store(&self) -> &S {
        &self.store
    }

    pub fn into_store(self) -> S {
        self.store
    }

    pub fn config(&self) -> &PacoConfig {
        &self.cfg
    }

    /// Number of points smart insert has declined.
    pub fn rejected_count(&self) -> u64 {
        self.rejected
    }

    pub fn range_changes(&self) -> &[RangeChange] {
        &self.range_log
    }

    /// Replaces the non-range defaults (grid factor, thresholds, weights).
    pub fn set_defaults(&mut self, cfg: PacoConfig) -> Result<(), PacoError> {
        cfg.validate()?;
        self.cfg = PacoConfig {
            space_range: self.cfg.space_range,
            time_range: self.cfg.time_range,
            ..cfg
        };
        Ok(())
    }

    /// Changes the influence ranges for the whole store. Points already kept
    /// by smart insert were judged under the old ranges, so every change is
    /// recorded.
    pub fn reconfigure_ranges(&mut self, space_range: f64, time_range: f64) -> Result<(), PacoError> {
        let next = PacoConfig {
            space_range,
            time_range,
            ..self.cfg
        };
        next.validate()?;
        self.range_log.push(RangeChange {
            old_space_range: self.cfg.space_range,
            old_time_range: self.cfg.time_range,
            new_space_range: space_range,
            new_time_range: time_range,
            at_len: self.store.len(),
        });
        self.cfg = next;
        Ok(())
    }

    /// Unconditional insert.
    pub fn insert(&mut self, p: ContextPoint) -> Result<(), PacoError> {
        Ok(self.store.insert(p)?)
    }

    /// The one-sub-cube window centered on `p` that smart insert probes.
    pub fn probe_window(&self, p: &ContextPoint) -> Result<QueryWindow, PacoError> {
        let half_m = self.cfg.space_range / (2.0 * self.cfg.grid_factor);
        let half_t = self.cfg.time_range / (2.0 * self.cfg.grid_factor);
        let center = GeoCoord::new(p.x, p.y).map_err(StoreError::from)?;
        let t = p.t as f64;
        Ok(QueryWindow::bounded(geo::flat_box(center, half_m), t - half_t, t + half_t)?)
    }

    /// Local PoK at `p`: the union of the influences of stored points within
    /// range, evaluated with `p` itself as the target.
    pub fn local_pok(&self, p: &StPoint) -> f64 {
        let candidates = self.store.range_query(&pok::influence_box(p, &self.cfg));
        pok::subcube_pok(p, &candidates, &self.cfg)
    }

    /// Inserts `p` only if the store does not already know its place and
    /// time well: skipped when the local PoK reaches `ins_thresh`.
    pub fn smart_insert(&mut self, p: ContextPoint) -> Result<InsertOutcome, PacoError> {
        self.smart_insert_with(p, self.cfg.ins_thresh)
    }

    pub fn smart_insert_with(&mut self, p: ContextPoint, threshold: f64) -> Result<InsertOutcome, PacoError> {
        if self.store.get(p.id).is_some() {
            return Err(StoreError::DuplicateId(p.id).into());
        }
        let p = ContextPoint::new(p.x, p.y, p.t, p.id)?;
        let measured_pok = self.local_pok(&p.position());
        let inserted = measured_pok < threshold;
        if inserted {
            self.store.insert(p)?;
        } else {
            self.rejected += 1;
        }
        Ok(InsertOutcome {
            inserted,
            measured_pok,
            threshold,
        })
    }

    pub fn window_pok(&self, win: &QueryWindow, overrides: &QueryOverrides) -> Result<PoKResult, PacoError> {
        let cfg = overrides.apply(&self.cfg);
        let mode = overrides.reference.unwrap_or_default();
        Ok(pok::window_pok_with(win, &self.store, &cfg, mode)?)
    }

    pub fn window_cells(
        &self,
        win: &QueryWindow,
        overrides: &QueryOverrides,
    ) -> Result<(PoKResult, pok::CellValues), PacoError> {
        let cfg = overrides.apply(&self.cfg);
        let mode = overrides.reference.unwrap_or_default();
        Ok(pok::window_cells(win, &self.store, &cfg, mode)?)
    }

    /// Snaps `a` and `b` to their nearest stored points and returns the
    /// time-ordered sequence between them.
    pub fn find_path(&self, a: &StPoint, b: &StPoint) -> Result<Vec<ContextPoint>, PacoError> {
        let scale = self.cfg.scale();
        let start = self
            .store
            .nearest_neighbor(a, &scale)
            .ok_or(PacoError::EmptyStore)?;
        let end = self
            .store
            .nearest_neighbor(b, &scale)
            .ok_or(PacoError::EmptyStore)?;
        Ok(self.store.get_sequence(&start, &end)?)
    }

    pub fn range_query(&self, b: &StBox) -> Vec<ContextPoint> {
        self.store.range_query(b)
    }
}
