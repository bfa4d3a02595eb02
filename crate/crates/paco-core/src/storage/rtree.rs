use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{closer, ContextPoint, NormScale, PointId, StBox, StPoint, StoreBackend, StoreError};
use crate::geo::{min_distance_to_box, GeoBox, GeoCoord, METERS_PER_DEGREE};
use crate::math;

pub const MAX_FANOUT: usize = 8;
pub const MIN_FANOUT: usize = 4;

// Split heuristics compare volumes; one degree is weighted as its length in
// meters and one second as one meter.
const AXIS_WEIGHT: [f64; 3] = [METERS_PER_DEGREE, METERS_PER_DEGREE, 1.0];

/// Axis-aligned bounding box over `(x, y, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Mbr {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Mbr {
    pub fn point(p: &ContextPoint) -> Self {
        let c = [p.x, p.y, p.t as f64];
        Self { min: c, max: c }
    }

    pub fn union(&self, other: &Mbr) -> Mbr {
        let mut out = *self;
        for i in 0..3 {
            out.min[i] = out.min[i].min(other.min[i]);
            out.max[i] = out.max[i].max(other.max[i]);
        }
        out
    }

    pub fn contains(&self, other: &Mbr) -> bool {
        (0..3).all(|i| self.min[i] <= other.min[i] && self.max[i] >= other.max[i])
    }

    // Padded volume so degenerate (point) boxes still compare sensibly.
    fn volume(&self) -> f64 {
        (0..3)
            .map(|i| (self.max[i] - self.min[i]) * AXIS_WEIGHT[i] + 1.0)
            .product()
    }

    fn enlargement(&self, other: &Mbr) -> f64 {
        self.union(other).volume() - self.volume()
    }

    fn intersects(&self, b: &StBox) -> bool {
        self.max[0] >= b.space.min.lon()
            && self.min[0] <= b.space.max.lon()
            && self.max[1] >= b.space.min.lat()
            && self.min[1] <= b.space.max.lat()
            && self.max[2] >= b.t_min
            && self.min[2] <= b.t_max
    }

    pub fn to_stbox(self) -> StBox {
        StBox {
            space: GeoBox {
                min: GeoCoord::new(self.min[0], self.min[1]).expect("stored coordinates are valid"),
                max: GeoCoord::new(self.max[0], self.max[1]).expect("stored coordinates are valid"),
            },
            t_min: self.min[2],
            t_max: self.max[2],
        }
    }

    fn lower_bound(&self, q: &StPoint, scale: &NormScale) -> f64 {
        let ds = min_distance_to_box(q.x, q.y, self.min[0], self.min[1], self.max[0], self.max[1]);
        let dt = if q.t < self.min[2] {
            self.min[2] - q.t
        } else if q.t > self.max[2] {
            q.t - self.max[2]
        } else {
            0.0
        };
        // Slack so rounding in the bound never prunes an equally close point.
        scale.combine(ds, dt) * (1.0 - 1e-9)
    }
}

#[derive(Debug, Clone)]
enum Children {
    Leaf(Vec<ContextPoint>),
    Inner(Vec<usize>),
}

#[derive(Debug, Clone)]
struct Node {
    mbr: Mbr,
    children: Children,
}

/// R-tree over degenerate point boxes with quadratic split
/// (fanout between [`MIN_FANOUT`] and [`MAX_FANOUT`]).
#[derive(Debug, Clone, Default)]
pub struct RTree {
    nodes: Vec<Node>,
    root: Option<usize>,
    height: usize,
    by_id: BTreeMap<PointId, ContextPoint>,
}

impl RTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of levels, 0 for an empty tree.
    pub fn height(&self) -> usize {
        self.height
    }

    fn node_mbr(&self, idx: usize) -> Mbr {
        self.nodes[idx].mbr
    }

    fn choose_child(&self, kids: &[usize], target: &Mbr) -> usize {
        let mut best = 0;
        let mut best_key = (f64::INFINITY, f64::INFINITY);
        for (i, &k) in kids.iter().enumerate() {
            let m = &self.nodes[k].mbr;
            let key = (m.enlargement(target), m.volume());
            if key.0 < best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
                best_key = key;
                best = i;
            }
        }
        kids[best]
    }

    /// Inserts below `idx`; returns a new sibling when `idx` was split.
    fn insert_at(&mut self, idx: usize, p: ContextPoint) -> Option<usize> {
        let target = Mbr::point(&p);
        let child = match &self.nodes[idx].children {
            Children::Leaf(_) => None,
            Children::Inner(kids) => Some(self.choose_child(kids, &target)),
        };
        match child {
            None => {
                if let Children::Leaf(pts) = &mut self.nodes[idx].children {
                    pts.push(p);
                }
            }
            Some(child) => {
                if let Some(sibling) = self.insert_at(child, p) {
                    if let Children::Inner(kids) = &mut self.nodes[idx].children {
                        kids.push(sibling);
                    }
                }
            }
        }
        let overfull = match &self.nodes[idx].children {
            Children::Leaf(pts) => pts.len() > MAX_FANOUT,
            Children::Inner(kids) => kids.len() > MAX_FANOUT,
        };
        if overfull {
            return Some(self.split_node(idx));
        }
        self.nodes[idx].mbr = self.nodes[idx].mbr.union(&target);
        None
    }

    /// Splits node `idx` in place and returns the index of the new sibling.
    fn split_node(&mut self, idx: usize) -> usize {
        let (keep, moved) = match core::mem::replace(&mut self.nodes[idx].children, Children::Inner(Vec::new())) {
            Children::Leaf(pts) => {
                let (a, b) = quadratic_split(pts.into_iter().map(|q| (Mbr::point(&q), q)).collect());
                let (ma, pa) = unzip_group(a);
                let (mb, pb) = unzip_group(b);
                (
                    Node { mbr: ma, children: Children::Leaf(pa) },
                    Node { mbr: mb, children: Children::Leaf(pb) },
                )
            }
            Children::Inner(kids) => {
                let entries = kids.into_iter().map(|k| (self.nodes[k].mbr, k)).collect();
                let (a, b) = quadratic_split(entries);
                let (ma, ka) = unzip_group(a);
                let (mb, kb) = unzip_group(b);
                (
                    Node { mbr: ma, children: Children::Inner(ka) },
                    Node { mbr: mb, children: Children::Inner(kb) },
                )
            }
        };
        self.nodes[idx] = keep;
        self.nodes.push(moved);
        self.nodes.len() - 1
    }

    /// Checks fanout bounds, MBR tightness and containment, and uniform leaf
    /// depth. Returns a description of the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let Some(root) = self.root else {
            return if self.by_id.is_empty() && self.height == 0 {
                Ok(())
            } else {
                Err(String::from("empty root with stored points"))
            };
        };
        let mut leaf_depths = Vec::new();
        let mut count = 0usize;
        self.validate_node(root, 1, true, &mut leaf_depths, &mut count)?;
        if leaf_depths.iter().any(|&d| d != self.height) {
            return Err(format!("leaves at depths {leaf_depths:?}, height {}", self.height));
        }
        if count != self.by_id.len() {
            return Err(format!("tree holds {count} points, index holds {}", self.by_id.len()));
        }
        Ok(())
    }

    fn validate_node(
        &self,
        idx: usize,
        depth: usize,
        is_root: bool,
        leaf_depths: &mut Vec<usize>,
        count: &mut usize,
    ) -> Result<(), String> {
        let node = &self.nodes[idx];
        let (n, tight) = match &node.children {
            Children::Leaf(pts) => {
                leaf_depths.push(depth);
                *count += pts.len();
                (pts.len(), union_all(pts.iter().map(Mbr::point)))
            }
            Children::Inner(kids) => {
                for &k in kids {
                    if !node.mbr.contains(&self.nodes[k].mbr) {
                        return Err(format!("node {idx} does not contain child {k}"));
                    }
                    self.validate_node(k, depth + 1, false, leaf_depths, count)?;
                }
                if is_root && kids.len() < 2 {
                    return Err(format!("inner root has {} children", kids.len()));
                }
                (kids.len(), union_all(kids.iter().map(|&k| self.nodes[k].mbr)))
            }
        };
        if n > MAX_FANOUT || (!is_root && n < MIN_FANOUT) {
            return Err(format!("node {idx} has {n} entries"));
        }
        if tight != node.mbr {
            return Err(format!("node {idx} bounding box is not tight"));
        }
        Ok(())
    }
}

fn union_all<I: IntoIterator<Item = Mbr>>(it: I) -> Mbr {
    let mut it = it.into_iter();
    let first = it.next().expect("non-empty node");
    it.fold(first, |acc, m| acc.union(&m))
}

fn unzip_group<E>(group: Vec<(Mbr, E)>) -> (Mbr, Vec<E>) {
    let mbr = union_all(group.iter().map(|(m, _)| *m));
    (mbr, group.into_iter().map(|(_, e)| e).collect())
}

type Group<E> = Vec<(Mbr, E)>;

/// Guttman's quadratic split of an overfull node into two groups of at
/// least [`MIN_FANOUT`] entries each.
fn quadratic_split<E>(mut entries: Vec<(Mbr, E)>) -> (Group<E>, Group<E>) {
    let n = entries.len();
    let (mut s1, mut s2, mut worst) = (0, 1, f64::NEG_INFINITY);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = entries[i].0.union(&entries[j].0).volume()
                - entries[i].0.volume()
                - entries[j].0.volume();
            if d > worst {
                worst = d;
                s1 = i;
                s2 = j;
            }
        }
    }
    // Remove the higher index first so the lower one stays valid.
    let seed2 = entries.swap_remove(s2);
    let seed1 = entries.swap_remove(s1);
    let mut m1 = seed1.0;
    let mut m2 = seed2.0;
    let mut g1 = alloc::vec![seed1];
    let mut g2 = alloc::vec![seed2];

    while !entries.is_empty() {
        let remaining = entries.len();
        if g1.len() + remaining == MIN_FANOUT {
            for e in entries.drain(..) {
                m1 = m1.union(&e.0);
                g1.push(e);
            }
            break;
        }
        if g2.len() + remaining == MIN_FANOUT {
            for e in entries.drain(..) {
                m2 = m2.union(&e.0);
                g2.push(e);
            }
            break;
        }
        let mut pick = 0;
        let mut best_diff = f64::NEG_INFINITY;
        for (i, (m, _)) in entries.iter().enumerate() {
            let diff = math::abs(m1.enlargement(m) - m2.enlargement(m));
            if diff > best_diff {
                best_diff = diff;
                pick = i;
            }
        }
        let e = entries.swap_remove(pick);
        let d1 = m1.enlargement(&e.0);
        let d2 = m2.enlargement(&e.0);
        let to_first = match d1.partial_cmp(&d2) {
            Some(Ordering::Less) => true,
            Some(Ordering::Greater) => false,
            _ => match m1.volume().partial_cmp(&m2.volume()) {
                Some(Ordering::Less) => true,
                Some(Ordering::Greater) => false,
                _ => g1.len() <= g2.len(),
            },
        };
        if to_first {
            m1 = m1.union(&e.0);
            g1.push(e);
        } else {
            m2 = m2.union(&e.0);
            g2.push(e);
        }
    }
    (g1, g2)
}

struct Frontier {
    bound: f64,
    node: usize,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // Reversed so the max-heap pops the smallest bound first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.node.cmp(&self.node))
    }
}

impl StoreBackend for RTree {
    fn insert(&mut self, p: ContextPoint) -> Result<(), StoreError> {
        if self.by_id.contains_key(&p.id) {
            return Err(StoreError::DuplicateId(p.id));
        }
        let validated = ContextPoint::new(p.x, p.y, p.t, p.id)?;
        self.by_id.insert(validated.id, validated);
        match self.root {
            None => {
                self.nodes.push(Node {
                    mbr: Mbr::point(&validated),
                    children: Children::Leaf(alloc::vec![validated]),
                });
                self.root = Some(self.nodes.len() - 1);
                self.height = 1;
            }
            Some(root) => {
                if let Some(sibling) = self.insert_at(root, validated) {
                    let mbr = self.node_mbr(root).union(&self.node_mbr(sibling));
                    self.nodes.push(Node {
                        mbr,
                        children: Children::Inner(alloc::vec![root, sibling]),
                    });
                    self.root = Some(self.nodes.len() - 1);
                    self.height += 1;
                }
            }
        }
        Ok(())
    }

    fn range_query(&self, b: &StBox) -> Vec<ContextPoint> {
        let mut out = Vec::new();
        let Some(root) = self.root else {
            return out;
        };
        let mut stack = alloc::vec![root];
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx];
            if !node.mbr.intersects(b) {
                continue;
            }
            match &node.children {
                Children::Leaf(pts) => out.extend(pts.iter().filter(|p| b.contains(p)).copied()),
                Children::Inner(kids) => stack.extend(kids.iter().copied()),
            }
        }
        out
    }

    fn nearest_neighbor(&self, q: &StPoint, scale: &NormScale) -> Option<ContextPoint> {
        let root = self.root?;
        let mut heap = BinaryHeap::new();
        heap.push(Frontier {
            bound: self.nodes[root].mbr.lower_bound(q, scale),
            node: root,
        });
        let mut best: Option<(f64, PointId)> = None;
        let mut found = None;
        while let Some(Frontier { bound, node }) = heap.pop() {
            if let Some((bd, _)) = best {
                if bound > bd {
                    break;
                }
            }
            match &self.nodes[node].children {
                Children::Leaf(pts) => {
                    for p in pts {
                        let d = scale.distance(p, q);
                        if closer(d, p.id, best) {
                            best = Some((d, p.id));
                            found = Some(*p);
                        }
                    }
                }
                Children::Inner(kids) => {
                    for &k in kids {
                        let lb = self.nodes[k].mbr.lower_bound(q, scale);
                        if best.is_none_or(|(bd, _)| lb <= bd) {
                            heap.push(Frontier { bound: lb, node: k });
                        }
                    }
                }
            }
        }
        found
    }

    fn get(&self, id: PointId) -> Option<ContextPoint> {
        self.by_id.get(&id).copied()
    }

    fn len(&self) -> usize {
        self.by_id.len()
    }

    fn extent(&self) -> Option<StBox> {
        self.root.map(|r| self.nodes[r].mbr.to_stbox())
    }

    fn points(&self) -> Vec<ContextPoint> {
        self.by_id.values().copied().collect()
    }
}
