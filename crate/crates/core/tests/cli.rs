use std::process::{Command, Output};

fn lrd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrd")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let o = lrd(&["predict", "--t0", "1", "--t1", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_window_reports_kind() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, r#"{"kind": "fbm", "H": 0.75}"#).unwrap();
    let o = lrd(&["predict", "--model", model.to_str().unwrap(), "--t0", "1", "--t1", "2", "--T", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("error kind=invalid_argument"), "{err}");
    assert!(err.contains("window"), "{err}");
}

#[test]
fn predict_needs_a_model() {
    let o = lrd(&["predict", "--t0", "1", "--t1", "0", "--T", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--model is required"));
}

#[test]
fn simulation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, r#"{"kind": "two_index", "H": 0.75, "H0": 0.6}"#).unwrap();
    let m = model.to_str().unwrap();
    let run = |seed: &str| {
        lrd(&[
            "simulate", "--model", m, "--lo", "-1", "--hi", "1", "--step", "0.25", "--replicates", "3", "--seed", seed,
        ])
    };
    let a = run("7");
    let b = run("7");
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("replicate,t,x\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 9);
    assert_ne!(a.stdout, run("8").stdout);
}

#[test]
fn verify_suite_passes() {
    let o = lrd(&["verify", "--suite", "fbm-closed-forms"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn kernel_from_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, r#"{"kind": "fbm", "H": 0.75}"#).unwrap();
    let out = dir.path().join("kernel.csv");
    let o = lrd(&[
        "kernel",
        "--t2",
        "1",
        "--points",
        "3",
        "--model",
        model.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("t_or_s,u,b,b2,b3,h"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn baxter_prints_one_row_per_t0() {
    let o = lrd(&["baxter", "--H", "0.75", "--t1", "0", "--T", "1", "--t0-list", "1,10,100"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    for row in text.lines().skip(1) {
        let ratio: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(ratio > 0.0 && ratio < 1.0);
    }
}
