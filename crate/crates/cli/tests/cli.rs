use std::path::Path;
use std::process::{Command, Output};

fn aosnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aosnet")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "[network]\ngateways = 2\nservers = 2\n\n[workload]\nrequests = 2\nvnfs_per_dag = 3\n\n\
[scheduling]\nslots = 5\ntraining_slots = 60\n\n[experiment]\nruns = 2\nschedulers = [\"greedy\", \"random\"]\n";

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("small.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn default_config_loads_back() {
    let out = aosnet(&["default-config"]);
    assert!(out.status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &stdout(&out));
    let audit = aosnet(&["audit", "--config", &cfg, "--seed", "2"]);
    assert!(audit.status.success(), "{}", stderr(&audit));
    assert!(stdout(&audit).lines().any(|l| l == "match true"));
}

#[test]
fn run_writes_every_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let results = dir.path().join("results");
    let out = aosnet(&[
        "run",
        "--config",
        &cfg,
        "--out",
        results.to_str().unwrap(),
        "--axis",
        "requests",
        "--values",
        "1,2",
        "--workers",
        "2",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("axis_value,scheduler,mean,stddev,n\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 2);
    let raw = std::fs::read_to_string(results.join("raw.csv")).unwrap();
    assert_eq!(raw.lines().count(), 1 + 2 * 2 * 2);
    for f in ["summary.csv", "slots.csv", "episodes.csv"] {
        assert!(results.join(f).exists(), "{f}");
    }

    let again = dir.path().join("again");
    let out = aosnet(&[
        "run", "--config", &cfg, "--out", again.to_str().unwrap(), "--axis", "requests", "--values", "1,2",
    ]);
    assert!(out.status.success());
    for f in ["raw.csv", "summary.csv", "slots.csv", "episodes.csv"] {
        assert_eq!(std::fs::read(results.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn runtime_flag_fills_the_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let results = dir.path().join("timed");
    let out = aosnet(&["run", "--config", &cfg, "--out", results.to_str().unwrap(), "--record-runtime"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let raw = std::fs::read_to_string(results.join("raw.csv")).unwrap();
    for line in raw.lines().skip(1) {
        let ms: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(ms >= 0.0);
    }
}

#[test]
fn episode_prints_a_summary_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let slots = dir.path().join("slots.csv");
    let out = aosnet(&["episode", "--config", &cfg, "--scheduler", "idle", "--seed", "4", "--out", slots.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "scheduler,seed,objective,rejected,solves,unproven,fallbacks,vetoes\nidle,4,3.0,0,0,0,0,0\n"
    );
    let rows = std::fs::read_to_string(slots).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 5);
}

#[test]
fn export_lp_writes_a_complete_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let lp = dir.path().join("model.lp");
    let out = aosnet(&["export-lp", "--config", &cfg, "--out", lp.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(lp).unwrap();
    assert!(text.contains("Minimize\n obj: max_avg_age\nSubject To\n"));
    assert!(text.ends_with("End\n"));
    let piped = aosnet(&["export-lp", "--config", &cfg]);
    assert_eq!(stdout(&piped), text);
}

#[test]
fn external_solver_flag_reaches_the_milp_policy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = aosnet(&["episode", "--config", &cfg, "--scheduler", "milp", "--solver", "exit 7 # {input} {output}"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("external solver process failed"), "{}", stderr(&out));
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[network]\ngatways = 2\n");
    let out = aosnet(&["audit", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error: configuration error"), "{}", stderr(&out));

    let cfg = write_config(dir.path(), SMALL);
    let out = aosnet(&["run", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap(), "--axis", "altitude", "--values", "1"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown sweep axis"));

    let out = aosnet(&["episode", "--config", &cfg, "--scheduler", "oracle"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown scheduler"));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = aosnet(&["run", "--config", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert!(!out.status.success());
}
