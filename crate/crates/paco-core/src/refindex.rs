//! In-memory 3-d k-d tree over a fixed point set.
//!
//! Built once per window computation from the expanded pre-query result and
//! discarded afterwards. Splits cycle x -> y -> t at the median; points that
//! tie on the split coordinate are ordered by id, so lower ids go left.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::storage::{ContextPoint, StBox};

#[inline]
fn coord(p: &ContextPoint, axis: usize) -> f64 {
    match axis {
        0 => p.x,
        1 => p.y,
        _ => p.t as f64,
    }
}

#[inline]
fn axis_order(a: &ContextPoint, b: &ContextPoint, axis: usize) -> Ordering {
    coord(a, axis)
        .total_cmp(&coord(b, axis))
        .then(a.id.cmp(&b.id))
}

/// Balanced k-d tree stored implicitly: the node of a slice is its middle
/// element, the left and right halves are its subtrees.
#[derive(Debug, Clone, Default)]
pub struct RefTree {
    points: Vec<ContextPoint>,
}

impl RefTree {
    pub fn build(mut points: Vec<ContextPoint>) -> Self {
        build_rec(&mut points, 0);
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of levels (0 when empty).
    pub fn depth(&self) -> usize {
        fn rec(n: usize) -> usize {
            if n == 0 {
                0
            } else {
                let mid = n / 2;
                1 + rec(mid).max(rec(n - mid - 1))
            }
        }
        rec(self.points.len())
    }

    /// Member points inside `b`, inclusive on every bound.
    pub fn range(&self, b: &StBox) -> Vec<ContextPoint> {
        let mut out = Vec::new();
        self.range_into(b, &mut out);
        out
    }

    pub fn range_into(&self, b: &StBox, out: &mut Vec<ContextPoint>) {
        let lo = [b.space.min.lon(), b.space.min.lat(), b.t_min];
        let hi = [b.space.max.lon(), b.space.max.lat(), b.t_max];
        range_rec(&self.points, 0, &lo, &hi, b, out);
    }

    pub fn points(&self) -> &[ContextPoint] {
        &self.points
    }
}

fn build_rec(slice: &mut [ContextPoint], axis: usize) {
    if slice.len() <= 1 {
        return;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |a, b| axis_order(a, b, axis));
    let (left, rest) = slice.split_at_mut(mid);
    build_rec(left, (axis + 1) % 3);
    build_rec(&mut rest[1..], (axis + 1) % 3);
}

fn range_rec(
    slice: &[ContextPoint],
    axis: usize,
    lo: &[f64; 3],
    hi: &[f64; 3],
    b: &StBox,
    out: &mut Vec<ContextPoint>,
) {
    if slice.is_empty() {
        return;
    }
    let mid = slice.len() / 2;
    let node = &slice[mid];
    if b.contains(node) {
        out.push(*node);
    }
    let v = coord(node, axis);
    let next = (axis + 1) % 3;
    if lo[axis] <= v {
        range_rec(&slice[..mid], next, lo, hi, b, out);
    }
    if hi[axis] >= v {
        range_rec(&slice[mid + 1..], next, lo, hi, b, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoBox;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<ContextPoint> {
        (0..n)
            .map(|i| {
                // Coarse grid so many coordinates tie.
                let gx = rng.random_range(0..20) as f64 * 0.001;
                let gy = rng.random_range(0..20) as f64 * 0.001;
                ContextPoint::new(8.0 + gx, 50.0 + gy, rng.random_range(0..50) * 60, i as u64)
                    .unwrap()
            })
            .collect()
    }

    fn random_box(rng: &mut ChaCha8Rng) -> StBox {
        let x0 = 8.0 + rng.random_range(-0.002..0.02);
        let y0 = 50.0 + rng.random_range(-0.002..0.02);
        let t0 = rng.random_range(-100.0..3000.0);
        StBox::new(
            GeoBox::from_bounds(x0, y0, x0 + rng.random_range(0.0..0.01), y0 + rng.random_range(0.0..0.01))
                .unwrap(),
            t0,
            t0 + rng.random_range(0.0..1500.0),
        )
        .unwrap()
    }

    fn sorted(mut v: Vec<ContextPoint>) -> Vec<ContextPoint> {
        v.sort_by_key(|p| p.id);
        v
    }

    #[test]
    fn empty_tree() {
        let t = RefTree::build(Vec::new());
        assert!(t.is_empty());
        assert_eq!(t.depth(), 0);
        assert!(t.range(&StBox::everything()).is_empty());
    }

    #[test]
    fn single_point_is_root() {
        let p = ContextPoint::new(1.0, 2.0, 3, 4).unwrap();
        let t = RefTree::build(alloc::vec![p]);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.range(&StBox::everything()), [p]);
    }

    #[test]
    fn depth_is_logarithmic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = RefTree::build(random_points(&mut rng, 1023));
        // ceil(log2(1023)) + 1
        assert!(t.depth() <= 11, "{}", t.depth());
    }

    #[test]
    fn covering_and_disjoint_boxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = random_points(&mut rng, 200);
        let t = RefTree::build(pts.clone());
        assert_eq!(sorted(t.range(&StBox::everything())), pts);
        let far = StBox::new(GeoBox::from_bounds(-10.0, -10.0, -9.0, -9.0).unwrap(), 0.0, 1e9).unwrap();
        assert!(t.range(&far).is_empty());
    }

    #[test]
    fn range_matches_scan_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let pts = random_points(&mut rng, 300);
            let t = RefTree::build(pts.clone());
            for _ in 0..100 {
                let b = random_box(&mut rng);
                let expected: Vec<_> = pts.iter().filter(|p| b.contains(p)).copied().collect();
                assert_eq!(sorted(t.range(&b)), expected);
            }
        }
    }

    #[test]
    fn build_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = random_points(&mut rng, 500);
        let a = RefTree::build(pts.clone());
        let b = RefTree::build(pts);
        assert_eq!(a.points(), b.points());
    }
}
