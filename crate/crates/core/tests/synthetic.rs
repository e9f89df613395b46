use std::time::Instant;

use gmse_core::synthetic::{item_spec, MIN_SIDE};
use gmse_core::weighting::disparity_magnitude;
use gmse_core::{make_dataset, make_wake_field, Dataset, FlowCondition};

#[test]
fn wake_fields_are_gradient_rich() {
    let d = make_dataset(20, 64, 64, 3).unwrap();
    for item in d.items() {
        let mut m = disparity_magnitude(&item.field).into_values();
        m.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = m[m.len() / 2];
        let p95 = m[m.len() * 95 / 100];
        assert!(p95 > 5.0 * median, "p95 {p95} median {median}");
        assert!(item.field.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn generation_is_deterministic_and_order_free() {
    let a = make_dataset(200, 32, 32, 11).unwrap();
    let b = make_dataset(200, 32, 32, 11).unwrap();
    assert_eq!(a, b);
    for (i, item) in a.items().iter().enumerate() {
        let (cond, seed) = item_spec(11, i);
        assert_eq!(item.condition, cond);
        let serial = make_wake_field(32, 32, cond, seed).unwrap();
        assert_eq!(item.field, serial);
    }
    assert_ne!(a, make_dataset(200, 32, 32, 12).unwrap());
}

#[test]
fn twelve_hundred_items_generate_quickly() {
    let t = Instant::now();
    let d = make_dataset(1200, 64, 64, 0).unwrap();
    assert_eq!(d.len(), 1200);
    assert!(t.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn dataset_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = make_dataset(12, 16, 20, 9).unwrap();
    d.write_dir(dir.path()).unwrap();
    let back = Dataset::read_dir(dir.path(), 9).unwrap();
    assert_eq!(back.len(), 12);
    for (x, y) in d.items().iter().zip(back.items()) {
        assert_eq!(x.condition, y.condition);
        let cast = x.field.map(|v| v as f32 as f64).unwrap();
        assert_eq!(cast, y.field);
    }
}

#[test]
fn validation_split_takes_the_tail() {
    let d = make_dataset(10, 16, 16, 0).unwrap();
    let (train, val) = d.split(0.2).unwrap();
    assert_eq!(train, (0..8).collect::<Vec<_>>());
    assert_eq!(val, vec![8, 9]);
}

#[test]
fn rejects_bad_requests() {
    assert!(make_dataset(0, 32, 32, 0).is_err());
    assert!(make_wake_field(MIN_SIDE - 1, 32, FlowCondition::new(1.0, 10.0).unwrap(), 0).is_err());
    assert!(FlowCondition::new(0.0, 10.0).is_err());
    assert!(FlowCondition::new(1.0, 61.0).is_err());
}
