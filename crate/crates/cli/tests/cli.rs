use std::path::Path;
use std::process::{Command, Output};

use rwre::harness::fixtures::{deterministic_07, period_two};
use rwre::harness::{ExperimentConfig, ExperimentKind, MANIFEST_FILE};

fn rwre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwre"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> String {
    let p = dir.join("exp.toml");
    std::fs::write(&p, cfg.to_toml()).unwrap();
    p.to_str().unwrap().to_string()
}

fn run_dir(o: &Output) -> String {
    stdout(o).split_whitespace().nth(1).unwrap().to_string()
}

#[test]
fn run_inspect_export_drift() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let cfg = ExperimentConfig::new(ExperimentKind::Drift, &deterministic_07(), vec![1000], 1000, 7);
    let path = write_config(dir.path(), &cfg);
    let o = rwre(&["run", "--config", &path, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("wrote "));
    let run = run_dir(&o);
    assert!(Path::new(&run).join(MANIFEST_FILE).exists());

    let again = rwre(&["run", "--config", &path, "--out", out.to_str().unwrap(), "--workers", "3"]);
    assert!(stdout(&again).starts_with("reused "));
    let forced = rwre(&["run", "--config", &path, "--out", out.to_str().unwrap(), "--force"]);
    assert!(stdout(&forced).starts_with("wrote "));

    let i = rwre(&["inspect", &run]);
    assert!(i.status.success());
    assert!(stdout(&i).contains("status    complete"));

    let e = rwre(&["export", &run]);
    assert!(e.status.success());
    let table = stdout(&e);
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("n,coord,mean,std_error,exact"));
    let f: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((f[2] - 0.4).abs() <= 3.0 * f[3], "drift {} +/- {}", f[2], f[3]);
}

#[test]
fn seed_override_changes_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let cfg = ExperimentConfig::new(ExperimentKind::Drift, &deterministic_07(), vec![100], 10, 7);
    let path = write_config(dir.path(), &cfg);
    let a = rwre(&["run", "--config", &path, "--out", out.to_str().unwrap()]);
    let b = rwre(&["run", "--config", &path, "--out", out.to_str().unwrap(), "--seed", "0x2a"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(run_dir(&a), run_dir(&b));
}

#[test]
fn decomposition_reports_identity_residual() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::Decomposition, &period_two(), vec![10_000], 100, 3);
    cfg.output_dir = dir.path().join("runs");
    let path = write_config(dir.path(), &cfg);
    let o = rwre(&["run", "--config", &path]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let result = std::fs::read_to_string(Path::new(&run_dir(&o)).join("result.toml")).unwrap();
    let doc: toml::Table = result.parse().unwrap();
    let r = doc["estimate"]["max-identity-residual"].as_float().unwrap();
    assert!(r <= 1e-9, "{r}");
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "kind = \"drift\"\nn-grid = [10]\nreplica = 3\n").unwrap();
    let o = rwre(&["run", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("replica"), "{err}");
}

#[test]
fn unsupported_pair_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::Decomposition, &rwre::harness::fixtures::balanced_1d(1), vec![100], 2, 3);
    cfg.output_dir = dir.path().join("runs");
    let path = write_config(dir.path(), &cfg);
    let o = rwre(&["run", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("corrector_series_mc"));
}

#[test]
fn unknown_suite_and_bad_args_exit_2() {
    assert_eq!(rwre(&["verify", "nope"]).status.code(), Some(2));
    assert_eq!(rwre(&["run"]).status.code(), Some(2));
    assert_eq!(rwre(&["run", "--config", "x", "--seed", "zz"]).status.code(), Some(2));
    assert_eq!(rwre(&["inspect", "/nonexistent/run"]).status.code(), Some(2));
}

#[test]
fn verify_oracles_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = rwre(&["verify", "oracles", "--out", dir.path().to_str().unwrap()]);
    let text = stdout(&o);
    print!("{text}");
    assert!(o.status.success());
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
}

#[test]
fn shipped_configs_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let p = entry.unwrap().path();
        let text = std::fs::read_to_string(&p).unwrap();
        ExperimentConfig::from_toml(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        let o = rwre(&["run", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
        seen += 1;
    }
    assert!(seen >= 6);
}
