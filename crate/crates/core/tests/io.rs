use gmse_core::rng::SeedStream;
use gmse_core::{read_field, write_field, Error, Field, FieldFormat};

fn f32_field(h: usize, w: usize, rng: &mut SeedStream) -> Field {
    Field::from_fn(h, w, |_, _| rng.uniform(-1e3, 1e3) as f32 as f64).unwrap()
}

#[test]
fn f32bin_round_trips_representable_values() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = SeedStream::new(77);
    for i in 0..1000 {
        let (h, w) = (1 + rng.below(20), 1 + rng.below(20));
        let f = f32_field(h, w, &mut rng);
        let path = dir.path().join(format!("f{i}.f32bin"));
        write_field(&f, &path, FieldFormat::F32Bin).unwrap();
        assert_eq!(read_field(&path, FieldFormat::F32Bin).unwrap(), f);
    }
}

#[test]
fn csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = SeedStream::new(5);
    for i in 0..50 {
        let f = Field::from_fn(7, 3, |_, _| rng.normal() * 1e-3).unwrap();
        let path = dir.path().join(format!("f{i}.csv"));
        write_field(&f, &path, FieldFormat::Csv).unwrap();
        assert_eq!(read_field(&path, FieldFormat::Csv).unwrap(), f);
    }
}

#[test]
fn pgm_preserves_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let f = Field::from_fn(4, 4, |r, c| (r * 4 + c) as f64).unwrap();
    let path = dir.path().join("f.pgm");
    write_field(&f, &path, FieldFormat::Pgm).unwrap();
    let back = read_field(&path, FieldFormat::Pgm).unwrap();
    assert_eq!(back.shape(), (4, 4));
    assert_eq!(back.get(0, 0), 0.0);
    assert_eq!(back.get(3, 3), 1.0);
    assert!(back.values().windows(2).all(|p| p[0] < p[1]));
}

#[test]
fn truncated_binary_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.f32bin");
    write_field(&Field::zeros(3, 3).unwrap(), &path, FieldFormat::F32Bin).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 2]).unwrap();
    assert!(matches!(read_field(&path, FieldFormat::F32Bin), Err(Error::Format { .. })));
}

#[test]
fn bad_csv_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    std::fs::write(&path, "1,2\n3,x\n").unwrap();
    let err = read_field(&path, FieldFormat::Csv).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn missing_file_is_io() {
    let err = read_field("/nonexistent/dir/f.csv", FieldFormat::Csv).unwrap_err();
    assert!(err.is_io());
}
