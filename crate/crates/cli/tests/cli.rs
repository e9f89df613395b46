use std::path::Path;
use std::process::{Command, Output};

use gmse_core::io::FieldFormat;
use gmse_core::{make_wake_field, read_field, write_field, Field, FlowCondition};

fn gmse(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmse"))
        .args(args)
        .current_dir(dir)
        .env_remove("GMSE_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap().trim().to_string()
}

fn sample(dir: &Path, name: &str, seed: u64) {
    let f = make_wake_field(32, 32, FlowCondition::new(3.0, 15.0).unwrap(), seed).unwrap();
    write_field(&f, dir.join(name), FieldFormat::F32Bin).unwrap();
}

#[test]
fn weightmap_range_and_constant_input() {
    let t = tempfile::tempdir().unwrap();
    sample(t.path(), "a.f32bin", 1);
    let out = gmse(
        t.path(),
        &["weightmap", "--in", "a.f32bin", "--sigma", "10", "--gamma", "1", "--offset", "0.2", "--out", "w.f32bin", "--pgm", "w.pgm"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let w = read_field(t.path().join("w.f32bin"), FieldFormat::F32Bin).unwrap();
    assert_eq!(w.max(), 1.0);
    assert_eq!(w.min(), 0.2f32 as f64);
    assert!(t.path().join("w.pgm").exists());
    assert!(t.path().join("w.f32bin.manifest.json").exists());

    write_field(&Field::filled(20, 20, 0.3).unwrap(), t.path().join("c.csv"), FieldFormat::Csv).unwrap();
    let out = gmse(t.path(), &["weightmap", "--in", "c.csv", "--offset", "0.25", "--out", "cw.f32bin"]);
    assert_eq!(code(&out), 0);
    let cw = read_field(t.path().join("cw.f32bin"), FieldFormat::F32Bin).unwrap();
    assert!(cw.values().iter().all(|&v| v == 0.25));
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let missing = gmse(t.path(), &["weightmap", "--in", "nope.f32bin", "--out", "w.f32bin"]);
    assert_eq!(code(&missing), 3);
    assert!(!t.path().join("w.f32bin").exists());
    assert!(!String::from_utf8_lossy(&missing.stderr).is_empty());

    assert_eq!(code(&gmse(t.path(), &["synth", "--n", "0", "--out", "d"])), 2);
    assert_eq!(code(&gmse(t.path(), &["synth", "--n", "3", "--size", "8x8", "--out", "d"])), 2);
    assert_eq!(code(&gmse(t.path(), &["frobnicate"])), 2);

    sample(t.path(), "a.f32bin", 1);
    write_field(&Field::zeros(16, 16).unwrap(), t.path().join("small.f32bin"), FieldFormat::F32Bin).unwrap();
    assert_eq!(code(&gmse(t.path(), &["loss", "--real", "a.f32bin", "--fake", "small.f32bin", "--mse"])), 4);
    assert_eq!(code(&gmse(t.path(), &["ssim", "--a", "a.f32bin", "--b", "small.f32bin"])), 4);
    assert_eq!(
        code(&gmse(t.path(), &["weightmap", "--in", "a.f32bin", "--offset", "1.5", "--out", "w.f32bin"])),
        2
    );
}

#[test]
fn loss_reduction_and_identity() {
    let t = tempfile::tempdir().unwrap();
    sample(t.path(), "a.f32bin", 1);
    sample(t.path(), "b.f32bin", 2);
    let same = gmse(t.path(), &["loss", "--real", "a.f32bin", "--fake", "a.f32bin", "--mse"]);
    assert_eq!(stdout(&same), "0");
    let m = stdout(&gmse(t.path(), &["loss", "--real", "a.f32bin", "--fake", "b.f32bin", "--mse"]));
    let g = stdout(&gmse(t.path(), &["loss", "--real", "a.f32bin", "--fake", "b.f32bin", "--gmse", "--offset", "1"]));
    assert_eq!(m, g);
    let g2 = stdout(&gmse(t.path(), &["loss", "--real", "a.f32bin", "--fake", "b.f32bin", "--gmse"]));
    assert!(g2.parse::<f64>().unwrap() < m.parse::<f64>().unwrap());
    assert!(t.path().join("gmse-loss.manifest.json").exists());
}

#[test]
fn ssim_flags_and_manifest() {
    let t = tempfile::tempdir().unwrap();
    sample(t.path(), "a.f32bin", 1);
    sample(t.path(), "b.f32bin", 2);
    let out = gmse(t.path(), &["ssim", "--a", "a.f32bin", "--b", "a.f32bin"]);
    assert_eq!(stdout(&out), "1.00000000000");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(t.path().join("gmse-ssim.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["parameters"]["k1"], "0.01");
    assert_eq!(manifest["parameters"]["k2"], "0.03");

    let unit = stdout(&gmse(t.path(), &["ssim", "--a", "a.f32bin", "--b", "b.f32bin"]));
    let wide = stdout(&gmse(t.path(), &["ssim", "--a", "a.f32bin", "--b", "b.f32bin", "--L", "255"]));
    let windowed = stdout(&gmse(t.path(), &["ssim", "--a", "a.f32bin", "--b", "b.f32bin", "--windowed"]));
    assert_ne!(unit, wide);
    assert_ne!(unit, windowed);
}

#[test]
fn synth_train_compare_artifacts() {
    let t = tempfile::tempdir().unwrap();
    let out = gmse(t.path(), &["synth", "--n", "12", "--size", "16x16", "--seed", "3", "--out", "data"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(t.path().join("data/manifest.csv").exists());
    assert!(t.path().join("data/field_00011.f32bin").exists());
    assert!(t.path().join("data/run_manifest.json").exists());

    let out = gmse(
        t.path(),
        &["train", "--data", "data", "--loss", "dgmse", "--epochs", "5", "--seed", "3", "--lr", "1e-3", "--out", "run"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let log = std::fs::read_to_string(t.path().join("run/train_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 6);
    assert!(log.starts_with("epoch,loss,ssim"));
    let table = std::fs::read_to_string(t.path().join("run/checkpoints.csv")).unwrap();
    assert_eq!(table.lines().map(|l| l.split(',').next().unwrap()).collect::<Vec<_>>(), ["epoch", "1", "5"]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(t.path().join("run/run_manifest.json")).unwrap()).unwrap();
    assert!(manifest["parameters"]["loss"].as_str().unwrap().starts_with("dgmse[0:"));
    assert_eq!(manifest["seeds"][0], 3);

    std::fs::write(t.path().join("sched.txt"), "# two stages\n0 5 1 0.3\n2 3 0.5 0.2\n").unwrap();
    let out = gmse(
        t.path(),
        &["train", "--data", "data", "--loss", "dgmse", "--schedule", "sched.txt", "--epochs", "3", "--out", "run2"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let bad_sched = gmse(t.path(), &["train", "--data", "data", "--loss", "mse", "--schedule", "sched.txt", "--out", "r"]);
    assert_eq!(code(&bad_sched), 2);
    assert_eq!(code(&gmse(t.path(), &["train", "--data", "data", "--loss", "huber", "--out", "r"])), 2);
    assert_eq!(code(&gmse(t.path(), &["train", "--data", "missing", "--loss", "mse", "--out", "r"])), 3);

    let out = gmse(
        t.path(),
        &["compare", "--data", "data", "--runs", "mse,gmse", "--epochs", "100", "--lr", "1e-3", "--out", "cmp"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(t.path().join("cmp/comparison.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "run,loss,ssim@1,ssim@5,ssim@20,ssim@100,max_loss_rate,final_loss");
    assert_eq!(lines.len(), 3);
    let svg = std::fs::read_to_string(t.path().join("cmp/loss_curves.svg")).unwrap();
    assert!(svg.contains(r#"data-y-max="1.00""#));
    assert!(t.path().join("cmp/curves.csv").exists());
    assert_eq!(code(&gmse(t.path(), &["compare", "--data", "data", "--runs", "mse", "--out", "c2"])), 2);
    assert_eq!(code(&gmse(t.path(), &["compare", "--data", "data", "--runs", "mse,gmse:1", "--out", "c2"])), 2);
}

#[test]
fn thread_count_does_not_change_outputs() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(code(&gmse(t.path(), &["synth", "--n", "10", "--size", "16x16", "--out", "data"])), 0);
    let args = ["train", "--data", "data", "--loss", "gmse", "--epochs", "3", "--lr", "1e-3"];
    let one = gmse(t.path(), &[&args[..], &["--out", "one"]].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_gmse"))
        .args([&args[..], &["--out", "env"]].concat())
        .current_dir(t.path())
        .env("GMSE_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&one), 0);
    assert_eq!(code(&env), 0);
    let a = std::fs::read(t.path().join("one/train_log.csv")).unwrap();
    let b = std::fs::read(t.path().join("env/train_log.csv")).unwrap();
    assert_eq!(a, b);
}
