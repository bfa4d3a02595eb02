use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::rtree::Mbr;
use super::{scan_nearest, ContextPoint, NormScale, PointId, StBox, StPoint, StoreBackend, StoreError};

/// Single-table baseline: every query is a linear scan.
#[derive(Debug, Clone, Default)]
pub struct FlatTable {
    rows: Vec<ContextPoint>,
    by_id: BTreeMap<PointId, usize>,
    bounds: Option<Mbr>,
}

impl FlatTable {
    pub fn new() -> Self {
        Self::default()
    }
}

impl StoreBackend for FlatTable {
    fn insert(&mut self, p: ContextPoint) -> Result<(), StoreError> {
        if self.by_id.contains_key(&p.id) {
            return Err(StoreError::DuplicateId(p.id));
        }
        let p = ContextPoint::new(p.x, p.y, p.t, p.id)?;
        let m = Mbr::point(&p);
        self.bounds = Some(match self.bounds {
            Some(b) => b.union(&m),
            None => m,
        });
        self.by_id.insert(p.id, self.rows.len());
        self.rows.push(p);
        Ok(())
    }

    fn range_query(&self, b: &StBox) -> Vec<ContextPoint> {
        self.rows.iter().filter(|p| b.contains(p)).copied().collect()
    }

    fn nearest_neighbor(&self, q: &StPoint, scale: &NormScale) -> Option<ContextPoint> {
        scan_nearest(&self.rows, q, scale)
    }

    fn get(&self, id: PointId) -> Option<ContextPoint> {
        self.by_id.get(&id).map(|&i| self.rows[i])
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn extent(&self) -> Option<StBox> {
        self.bounds.map(Mbr::to_stbox)
    }

    fn points(&self) -> Vec<ContextPoint> {
        self.by_id.values().map(|&i| self.rows[i]).collect()
    }
}
