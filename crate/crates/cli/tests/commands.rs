use std::fs;
use std::path::Path;
use std::process::Command;

use mtdpsf::snapshot::read_snapshot;
use mtdpsf::GridSpec;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mtdpsf"))
}

const CONFIG: &str = "\
grid.N = 1024
grid.delta_x = 0.1
grid.M = 1
time.delta_t = 0.03125
time.Tmax = 2
initial.k0 = 3
initial.sigma = 1.5
output.snapshot_stride = 16
";

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_writes_snapshots_ledger_and_final_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("out");
    let status = bin()
        .args(["--threads", "2", "--out-dir"])
        .arg(&out)
        .arg("run")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));

    // 64 steps with a snapshot every 16, plus the initial one.
    for i in 0..5 {
        assert!(out.join(format!("snapshot_{i:05}.csv")).exists(), "snapshot {i}");
    }
    assert!(!out.join("snapshot_00005.csv").exists());

    let ledger = fs::read_to_string(out.join("ledger.csv")).unwrap();
    let mut lines = ledger.lines();
    assert_eq!(lines.next(), Some("t,n,side,removed_mass,mean_k"));
    assert!(lines.next().is_some(), "filters should have fired at least once");

    let grid = GridSpec::from_samples(1024, 0.1, 1, 1e-8).unwrap();
    let last = read_snapshot(fs::read(out.join("final.csv")).unwrap().as_slice(), &grid).unwrap();
    assert!((last.time - 2.0).abs() < 1e-12);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let mut finals = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let ok = bin().arg("--out-dir").arg(&out).arg("run").arg(&cfg).status().unwrap();
        assert!(ok.success());
        finals.push((
            fs::read(out.join("final.csv")).unwrap(),
            fs::read(out.join("ledger.csv")).unwrap(),
        ));
    }
    assert!(finals[0] == finals[1]);
}

#[test]
fn scale_override_changes_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("time.Tmax = 2", "time.Tmax = 0.0625"));
    let out = dir.path().join("out");
    let ok = bin().arg("--scales").arg("2").arg("--out-dir").arg(&out).arg("run").arg(&cfg).status().unwrap();
    assert!(ok.success());
    let grid = GridSpec::from_samples(1024, 0.1, 2, 1e-8).unwrap();
    read_snapshot(fs::read(out.join("final.csv")).unwrap().as_slice(), &grid).unwrap();
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid.bogus = 1\n");
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let missing = bin().arg("run").arg(dir.path().join("absent.cfg")).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn assumption_violation_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // A plane-wave-like packet filling the box cannot be split across scales.
    let cfg = write_config(
        dir.path(),
        &CONFIG.replace("initial.sigma = 1.5", "initial.sigma = 40").replace("initial.k0 = 3", "initial.k0 = 12"),
    );
    let out = bin()
        .arg("--strict-assumptions")
        .arg("--out-dir")
        .arg(dir.path().join("out"))
        .arg("run")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn snapshot_can_seed_a_new_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("time.Tmax = 2", "time.Tmax = 0.5"));
    let first = dir.path().join("first");
    assert!(bin().arg("--out-dir").arg(&first).arg("run").arg(&cfg).status().unwrap().success());

    let resumed = CONFIG
        .replace("initial.k0 = 3\ninitial.sigma = 1.5\n", "initial.table = first/final.csv\n")
        .replace("time.Tmax = 2", "time.Tmax = 0.5");
    let cfg2 = dir.path().join("resume.cfg");
    fs::write(&cfg2, resumed).unwrap();
    let second = dir.path().join("second");
    let out = bin().arg("--out-dir").arg(&second).arg("run").arg(&cfg2).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn potential_table_is_interpolated() {
    let dir = tempfile::tempdir().unwrap();
    let table: String = std::iter::once("x,V\n".to_string())
        .chain((-60..=60).map(|j| {
            let x = j as f64 * 2.0;
            format!("{x},{}\n", -1.0 / (1.0 + x * x))
        }))
        .collect();
    fs::write(dir.path().join("v.csv"), table).unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{}potential.table = v.csv\n", CONFIG.replace("time.Tmax = 2", "time.Tmax = 0.25")),
    );
    let out = bin().arg("--out-dir").arg(dir.path().join("o")).arg("run").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // A table that stops short of the coarsest box is a config error.
    fs::write(dir.path().join("v.csv"), "0,1\n1,2\n").unwrap();
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("time.Tmax = 2", "time.Tmax = 1"));
    let out = dir.path().join("o");
    let res = bin()
        .arg("--out-dir")
        .arg(&out)
        .args(["oracle", "--radius", "204.8", "--spacing", "0.1"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(out.join("oracle_00002.csv")).unwrap();
    assert!(text.starts_with("# t=1.0"));
    assert_eq!(text.lines().nth(1), Some("x,re,im"));
}
