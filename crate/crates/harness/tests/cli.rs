use std::path::Path;
use std::process::{Command, Output};

fn rrmimo(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rrmimo"))
        .args(args)
        .env("RRMIMO_OUT", out)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lists_and_shows_presets() {
    let dir = tempfile::tempdir().unwrap();
    let list = rrmimo(&["list"], dir.path());
    assert!(list.status.success());
    assert!(stdout(&list).lines().any(|l| l == "table1"));
    let show = rrmimo(&["show", "fig8"], dir.path());
    assert!(stdout(&show).contains("\"multicluster\""));
    assert_eq!(rrmimo(&["show", "nope"], dir.path()).status.code(), Some(1));
}

#[test]
fn passing_checks_exit_zero_and_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = rrmimo(&["run", "fig2", "--check", "--threads", "2"], dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("[PASS]"));
    let csv = std::fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    assert!(csv.starts_with("experiment,scenario,basis,estimator,m,alpha_db,eta,x,metric,value,std_err,note,seed,config_hash"));
    assert!(dir.path().join("fig2.config.json").is_file());
}

#[test]
fn failing_checks_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lonely.json");
    // the fig3 suite needs a second, wider scenario
    std::fs::write(
        &cfg,
        r#"{"name": "lonely", "experiment": "spectrum_report",
            "scenarios": [{"label": "n", "clusters": [{"mean_deg": 60.0, "spread_deg": 7.2}]}],
            "bases": ["dct"], "etas": [0.99], "alpha_db": [0], "trials": 1, "check": "fig3"}"#,
    )
    .unwrap();
    let o = rrmimo(&["run", cfg.to_str().unwrap(), "--check"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("[FAIL]"));
    // without --check the same run succeeds
    assert_eq!(
        rrmimo(&["run", cfg.to_str().unwrap()], dir.path())
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(rrmimo(&["run", "fig99"], dir.path()).status.code(), Some(1));
    assert_eq!(
        rrmimo(&["run", "missing.json"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(
        rrmimo(&["run", "fig2", "--trials", "0"], dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn replaying_the_written_config_reproduces_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = rrmimo(
        &[
            "run",
            "closed_form",
            "--trials",
            "20",
            "--seed",
            "5",
            "--out",
            first.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let second = dir.path().join("second");
    let replay = first.join("closed_form.config.json");
    let o = rrmimo(
        &[
            "run",
            replay.to_str().unwrap(),
            "--threads",
            "1",
            "--out",
            second.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let a = std::fs::read(first.join("closed_form.csv")).unwrap();
    let b = std::fs::read(second.join("closed_form.csv")).unwrap();
    assert_eq!(a, b);
}
