use paco_core::geo::GeoCoord;
use paco_core::trace::{synthetic_walk, to_points};
use paco_core::{
    FlatTable, Paco, PacoConfig, PacoError, QueryOverrides, QueryWindow, RTree, ReferenceMode, StPoint, StoreBackend,
};

fn walk() -> Vec<paco_core::ContextPoint> {
    to_points(&synthetic_walk(21, 3000, 20.0, 15, GeoCoord::new(127.36, 36.37).unwrap()), 0).unwrap()
}

#[test]
fn smart_insert_matches_across_backends() {
    let cfg = PacoConfig::peds();
    let mut a = Paco::new(RTree::new(), cfg).unwrap();
    let mut b = Paco::new(FlatTable::new(), cfg).unwrap();
    for p in walk() {
        let oa = a.smart_insert(p).unwrap();
        let ob = b.smart_insert(p).unwrap();
        assert_eq!(oa, ob);
        assert_eq!(oa.inserted, oa.measured_pok < cfg.ins_thresh);
    }
    assert_eq!(a.store().points(), b.store().points());
    assert_eq!(a.rejected_count(), b.rejected_count());
    assert!(a.store().len() < 3000);
    assert_eq!(a.store().len() as u64 + a.rejected_count(), 3000);
}

#[test]
fn window_pok_is_mode_and_backend_invariant() {
    let cfg = PacoConfig::peds();
    let mut a = Paco::new(RTree::new(), cfg).unwrap();
    let mut b = Paco::new(FlatTable::new(), cfg).unwrap();
    for p in walk() {
        a.insert(p).unwrap();
        b.insert(p).unwrap();
    }
    let ext = a.store().extent().unwrap();
    let win = QueryWindow::bounded(ext.space, ext.t_min, ext.t_min + 7200.0).unwrap();
    let mut seen = Vec::new();
    for mode in [ReferenceMode::KdTree, ReferenceMode::Linear, ReferenceMode::Direct] {
        let o = QueryOverrides {
            reference: Some(mode),
            ..Default::default()
        };
        seen.push(a.window_pok(&win, &o).unwrap().pok);
        seen.push(b.window_pok(&win, &o).unwrap().pok);
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]), "{seen:?}");
    assert!(seen[0] > 0.0 && seen[0] <= 1.0);
}

#[test]
fn find_path_walks_the_trace() {
    let pts = walk();
    let mut paco = Paco::new(RTree::new(), PacoConfig::peds()).unwrap();
    assert_eq!(
        paco.find_path(&StPoint::new(0.0, 0.0, 0.0), &StPoint::new(0.0, 0.0, 0.0)),
        Err(PacoError::EmptyStore)
    );
    for p in &pts {
        paco.insert(*p).unwrap();
    }
    let (a, b) = (pts[100], pts[200]);
    let path = paco.find_path(&a.position(), &b.position()).unwrap();
    assert_eq!(path, pts[100..=200].to_vec());
}
