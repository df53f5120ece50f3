use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgtc-sim"))
        .args(args)
        .env_remove("CGTC_SIM_THREADS")
        .output()
        .expect("spawn")
}

fn short_run(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--scenario",
        "1",
        "--runs",
        "3",
        "--max-rounds",
        "60",
        "--quiet",
        "--out",
    ];
    args.push(out.to_str().unwrap());
    args.extend_from_slice(extra);
    sim(&args)
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = short_run(out, &["--per-run", "--log-events", "--seed", "42"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in [
        "curve.csv",
        "landmarks.csv",
        "runs/cgtc_seed42.csv",
        "events/cgtc_seed43.jsonl",
    ] {
        let (x, y) = (
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
        );
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs");
    }
}

#[test]
fn curve_has_one_row_per_series_and_round() {
    let dir = tempfile::tempdir().unwrap();
    let o = short_run(dir.path(), &["--alg", "leach,cgc", "--p", "0.05,0.1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curve = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let mut lines = curve.lines();
    assert_eq!(
        lines.next(),
        Some("algorithm,round,mean_alive,ci_low,ci_high")
    );
    assert_eq!(lines.count(), 4 * 60);
    assert!(curve.contains("\ncgc(p=0.1),60,"));
    let landmarks = fs::read_to_string(dir.path().join("landmarks.csv")).unwrap();
    assert_eq!(landmarks.lines().count(), 5);
    assert!(!dir.path().join("runs").exists());
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(short_run(&a, &["--threads", "1"]).status.success());
    assert!(short_run(&b, &["--threads", "3"]).status.success());
    assert_eq!(
        fs::read(a.join("curve.csv")).unwrap(),
        fs::read(b.join("curve.csv")).unwrap()
    );
}

#[test]
fn validate_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "n = 100\nm = 100\nlambda = 0.02\n").unwrap();
    let o = sim(&["validate", "--config", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda * m^2"));

    fs::write(&path, "r_c = 20\nwibble = 3\n").unwrap();
    let o = sim(&["validate", "--config", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("wibble"));
}

#[test]
fn printed_config_validates() {
    let dir = tempfile::tempdir().unwrap();
    let o = sim(&["show-config", "--scenario", "2"]);
    assert!(o.status.success());
    let path = dir.path().join("s2.cfg");
    fs::write(&path, &o.stdout).unwrap();
    let v = sim(&["validate", "--config", path.to_str().unwrap()]);
    assert!(v.status.success(), "{}", String::from_utf8_lossy(&v.stderr));
    assert!(String::from_utf8_lossy(&v.stdout).contains("200 nodes, 200 m field"));
}

#[test]
fn single_run_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = sim(&[
        "run",
        "--runs",
        "1",
        "--max-rounds",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
}

#[test]
fn topology_dump() {
    let o = sim(&["topology", "--scenario", "1", "--seed", "9"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 100);
}
