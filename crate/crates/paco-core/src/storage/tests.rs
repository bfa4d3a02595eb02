use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::geo::haversine_m;

const SCALE: NormScale = NormScale {
    space_range: 1000.0,
    time_range: 3600.0,
};

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<ContextPoint> {
    (0..n)
        .map(|i| {
            ContextPoint::new(
                rng.random_range(-122.52..-122.35),
                rng.random_range(37.70..37.82),
                rng.random_range(0..86_400),
                i as u64,
            )
            .unwrap()
        })
        .collect()
}

fn random_box(rng: &mut ChaCha8Rng) -> StBox {
    let lon0 = rng.random_range(-122.55..-122.35);
    let lat0 = rng.random_range(37.68..37.82);
    let t0 = rng.random_range(-1000.0..86_400.0);
    let space = GeoBox::from_bounds(
        lon0,
        lat0,
        lon0 + rng.random_range(0.0..0.1),
        lat0 + rng.random_range(0.0..0.1),
    )
    .unwrap();
    StBox::new(space, t0, t0 + rng.random_range(0.0..40_000.0)).unwrap()
}

fn scan(points: &[ContextPoint], b: &StBox) -> Vec<ContextPoint> {
    let mut out: Vec<_> = points.iter().filter(|p| b.contains(p)).copied().collect();
    out.sort_by_key(|p| p.id);
    out
}

fn sorted(mut v: Vec<ContextPoint>) -> Vec<ContextPoint> {
    v.sort_by_key(|p| p.id);
    v
}

fn brute_nearest(points: &[ContextPoint], q: &StPoint) -> Option<ContextPoint> {
    let dist = |p: &ContextPoint| {
        let ds = haversine_m(p.x, p.y, q.x, q.y) / SCALE.space_range;
        let dt = (p.t as f64 - q.t).abs() / SCALE.time_range;
        (ds * ds + dt * dt).sqrt()
    };
    let mut all: Vec<(f64, ContextPoint)> = points.iter().map(|p| (dist(p), *p)).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
    all.first().map(|(_, p)| *p)
}

fn backends() -> (RTree, FlatTable) {
    (RTree::new(), FlatTable::new())
}

#[test]
fn empty_store_queries() {
    let (r, f) = backends();
    assert!(r.range_query(&StBox::everything()).is_empty());
    assert!(f.range_query(&StBox::everything()).is_empty());
    let q = StPoint::new(0.0, 0.0, 0.0);
    assert_eq!(r.nearest_neighbor(&q, &SCALE), None);
    assert_eq!(f.nearest_neighbor(&q, &SCALE), None);
    assert!(r.extent().is_none() && f.extent().is_none());
    r.validate().unwrap();
}

#[test]
fn single_insert_is_visible() {
    let p = ContextPoint::new(-122.4, 37.7, 100, 7).unwrap();
    let (mut r, mut f) = backends();
    r.insert(p).unwrap();
    f.insert(p).unwrap();
    assert_eq!(r.range_query(&StBox::everything()), [p]);
    assert_eq!(f.range_query(&StBox::everything()), [p]);
    assert_eq!(r.get(7), Some(p));
}

#[test]
fn duplicate_id_is_rejected() {
    let p = ContextPoint::new(-122.4, 37.7, 100, 7).unwrap();
    let q = ContextPoint::new(-122.3, 37.6, 200, 7).unwrap();
    let (mut r, mut f) = backends();
    r.insert(p).unwrap();
    f.insert(p).unwrap();
    assert_eq!(r.insert(q), Err(StoreError::DuplicateId(7)));
    assert_eq!(f.insert(p), Err(StoreError::DuplicateId(7)));
    assert_eq!(r.len(), 1);
    assert_eq!(f.len(), 1);
}

#[test]
fn invalid_points_are_rejected() {
    assert!(ContextPoint::new(0.0, 95.0, 0, 1).is_err());
    assert_eq!(
        ContextPoint::new(0.0, 0.0, -5, 1),
        Err(StoreError::NegativeTime(-5))
    );
    let mut r = RTree::new();
    let bad = ContextPoint {
        x: 200.0,
        y: 0.0,
        t: 0,
        id: 1,
    };
    assert!(r.insert(bad).is_err());
    assert!(r.is_empty());
}

#[test]
fn thousand_inserts_keep_tree_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pts = random_points(&mut rng, 1000);
    let mut r = RTree::new();
    for p in &pts {
        r.insert(*p).unwrap();
        r.validate().unwrap();
    }
    assert_eq!(r.len(), 1000);
    assert!(r.height() >= 4);
    assert_eq!(sorted(r.range_query(&StBox::everything())), pts);
}

#[test]
fn range_query_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = random_points(&mut rng, 100);
    let (mut r, mut f) = backends();
    for p in &pts {
        r.insert(*p).unwrap();
        f.insert(*p).unwrap();
    }
    for _ in 0..500 {
        let b = random_box(&mut rng);
        let expected = scan(&pts, &b);
        assert_eq!(sorted(r.range_query(&b)), expected);
        assert_eq!(sorted(f.range_query(&b)), expected);
    }
}

#[test]
fn range_bounds_are_inclusive() {
    let p = ContextPoint::new(10.0, 20.0, 500, 1).unwrap();
    let mut r = RTree::new();
    r.insert(p).unwrap();
    let b = StBox::new(GeoBox::from_bounds(10.0, 20.0, 10.0, 20.0).unwrap(), 500.0, 500.0).unwrap();
    assert_eq!(r.range_query(&b), [p]);
}

#[test]
fn nearest_neighbor_finds_exact_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts = random_points(&mut rng, 50);
    let mut r = RTree::new();
    for p in &pts {
        r.insert(*p).unwrap();
    }
    let target = pts[17];
    assert_eq!(r.nearest_neighbor(&target.position(), &SCALE), Some(target));
}

#[test]
fn nearest_neighbor_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..40 {
        let pts = random_points(&mut rng, 50);
        let (mut r, mut f) = backends();
        for p in &pts {
            r.insert(*p).unwrap();
            f.insert(*p).unwrap();
        }
        for _ in 0..25 {
            let q = StPoint::new(
                rng.random_range(-122.6..-122.3),
                rng.random_range(37.65..37.85),
                rng.random_range(-5000.0..90_000.0),
            );
            let expected = brute_nearest(&pts, &q);
            assert_eq!(r.nearest_neighbor(&q, &SCALE), expected);
            assert_eq!(f.nearest_neighbor(&q, &SCALE), expected);
        }
    }
}

#[test]
fn nearest_neighbor_ties_prefer_lower_id() {
    let a = ContextPoint::new(0.0, 0.0, 100, 9).unwrap();
    let b = ContextPoint::new(0.0, 0.0, 100, 4).unwrap();
    let (mut r, mut f) = backends();
    for p in [a, b] {
        r.insert(p).unwrap();
        f.insert(p).unwrap();
    }
    let q = StPoint::new(0.0, 0.0, 90.0);
    assert_eq!(r.nearest_neighbor(&q, &SCALE).unwrap().id, 4);
    assert_eq!(f.nearest_neighbor(&q, &SCALE).unwrap().id, 4);
}

#[test]
fn sequence_single_point() {
    let p = ContextPoint::new(1.0, 1.0, 10, 1).unwrap();
    let mut r = RTree::new();
    r.insert(p).unwrap();
    assert_eq!(r.get_sequence(&p, &p).unwrap(), [p]);
}

#[test]
fn sequence_three_points_in_time_order() {
    let a = ContextPoint::new(1.0, 1.0, 10, 3).unwrap();
    let b = ContextPoint::new(1.1, 1.0, 20, 1).unwrap();
    let c = ContextPoint::new(1.2, 1.0, 30, 2).unwrap();
    let mut f = FlatTable::new();
    for p in [c, a, b] {
        f.insert(p).unwrap();
    }
    assert_eq!(f.get_sequence(&c, &a).unwrap(), [a, b, c]);
    assert_eq!(f.get_sequence(&a, &c).unwrap(), [a, b, c]);
}

#[test]
fn sequence_endpoints_lead_and_trail_on_time_ties() {
    let a = ContextPoint::new(1.0, 1.0, 10, 5).unwrap();
    let tie_start = ContextPoint::new(1.0, 1.1, 10, 1).unwrap();
    let tie_end = ContextPoint::new(1.0, 1.2, 20, 9).unwrap();
    let b = ContextPoint::new(1.0, 1.3, 20, 2).unwrap();
    let mut r = RTree::new();
    for p in [a, tie_start, tie_end, b] {
        r.insert(p).unwrap();
    }
    let seq = r.get_sequence(&a, &b).unwrap();
    assert_eq!(seq, [a, tie_start, tie_end, b]);
}

#[test]
fn sequence_requires_stored_endpoints() {
    let a = ContextPoint::new(1.0, 1.0, 10, 1).unwrap();
    let missing = ContextPoint::new(1.0, 1.0, 20, 2).unwrap();
    let mut r = RTree::new();
    r.insert(a).unwrap();
    assert_eq!(r.get_sequence(&a, &missing), Err(StoreError::NotFound(2)));
    // Same id but different contents is not the stored point either.
    let forged = ContextPoint { t: 99, ..a };
    assert_eq!(r.get_sequence(&forged, &a), Err(StoreError::NotFound(1)));
}

#[test]
fn sequence_matches_sort_and_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let pts = random_points(&mut rng, 200);
    let (mut r, mut f) = backends();
    for p in &pts {
        r.insert(*p).unwrap();
        f.insert(*p).unwrap();
    }
    for _ in 0..50 {
        let a = pts[rng.random_range(0..pts.len())];
        let b = pts[rng.random_range(0..pts.len())];
        let (lo, hi) = (a.t.min(b.t), a.t.max(b.t));
        let mut expected: Vec<_> = pts.iter().filter(|p| p.t >= lo && p.t <= hi).copied().collect();
        expected.sort_by(ContextPoint::time_order);
        let got = r.get_sequence(&a, &b).unwrap();
        if a.t != b.t {
            assert_eq!(got, expected);
        }
        assert_eq!(got.len(), expected.len());
        assert_eq!(got, f.get_sequence(&a, &b).unwrap());
        let (first, last) = if b.t < a.t { (b, a) } else { (a, b) };
        assert_eq!(got.first(), Some(&first));
        assert_eq!(got.last(), Some(&last));
    }
}

#[test]
fn extent_covers_all_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pts = random_points(&mut rng, 300);
    let (mut r, mut f) = backends();
    for p in &pts {
        r.insert(*p).unwrap();
        f.insert(*p).unwrap();
    }
    let e = r.extent().unwrap();
    assert_eq!(e, f.extent().unwrap());
    assert!(pts.iter().all(|p| e.contains(p)));
    assert_eq!(r.range_query(&e).len(), pts.len());
}

#[test]
fn backends_agree_on_mixed_workloads() {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(1..400);
        let pts = random_points(&mut rng, n);
        let (mut r, mut f) = backends();
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(r.insert(*p), f.insert(*p));
            if i % 37 == 0 {
                assert_eq!(r.insert(*p), f.insert(*p));
                let b = random_box(&mut rng);
                assert_eq!(sorted(r.range_query(&b)), sorted(f.range_query(&b)));
            }
        }
        r.validate().unwrap();
        for _ in 0..10 {
            let b = random_box(&mut rng);
            assert_eq!(sorted(r.range_query(&b)), sorted(f.range_query(&b)));
            let q = StPoint::new(
                rng.random_range(-122.6..-122.3),
                rng.random_range(37.65..37.85),
                rng.random_range(0.0..86_400.0),
            );
            assert_eq!(r.nearest_neighbor(&q, &SCALE), f.nearest_neighbor(&q, &SCALE));
            let a = pts[rng.random_range(0..pts.len())];
            let c = pts[rng.random_range(0..pts.len())];
            assert_eq!(r.get_sequence(&a, &c), f.get_sequence(&a, &c));
        }
        assert_eq!(r.points(), f.points());
    }
}
