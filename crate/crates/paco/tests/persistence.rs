use paco::persist::{self, PersistError};
use paco_core::{ContextPoint, FlatTable, RTree, StoreBackend};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = (f64, f64, i64)> {
    (-180.0f64..180.0, -90.0f64..=90.0, 0i64..4_000_000_000)
}

proptest! {
    #[test]
    fn round_trip_is_exact(raw in prop::collection::vec(point(), 0..200)) {
        let mut s = RTree::new();
        for (i, (lon, lat, t)) in raw.iter().enumerate() {
            s.insert(ContextPoint::new(*lon, *lat, *t, (i as u64) * 7 + 3).unwrap()).unwrap();
        }
        let bytes = persist::encode(&s);
        let back: FlatTable = persist::read_store(&bytes[..]).unwrap();
        prop_assert_eq!(back.points(), s.points());
        prop_assert_eq!(persist::encode(&back), bytes);
    }
}

#[test]
fn save_and_load_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.txt");
    let mut s = RTree::new();
    for i in 0..50u64 {
        s.insert(ContextPoint::new(-122.4 + i as f64 * 1e-4, 37.7, 1_000 + i as i64, i).unwrap()).unwrap();
    }
    persist::save(&s, &path).unwrap();
    let back: RTree = persist::load(&path).unwrap();
    assert_eq!(back.points(), s.points());
    back.validate().unwrap();
}

#[test]
fn truncated_file_names_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.txt");
    let mut s = RTree::new();
    for i in 0..3u64 {
        s.insert(ContextPoint::new(1.5, 2.5, i as i64, i).unwrap()).unwrap();
    }
    persist::save(&s, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() - 6]).unwrap();
    let err = persist::load::<RTree>(&path).unwrap_err();
    assert!(matches!(err, PersistError::Parse { line: 4, .. }), "{err}");
    assert!(err.to_string().contains("\"2\""), "{err}");
}

#[test]
fn missing_file_is_io_error() {
    let err = persist::load::<RTree>(std::path::Path::new("/nonexistent/store.txt")).unwrap_err();
    assert!(matches!(err, PersistError::Io(_)));
}
