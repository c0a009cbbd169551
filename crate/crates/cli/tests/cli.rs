use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hwdd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hwdd"))
        .args(args)
        .current_dir(cwd)
        .env("HWDD_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Small elastic-plastic bar on a box mesh with the data next to it.
const BAR: &str = r#"{
  "mesh": {"kind": "box", "divisions": [2, 1, 1], "size": [2.0, 1.0, 1.0]},
  "boundary": {
    "fixed": [
      {"face": {"axis": "x", "at": 0.0}, "dof": "x"},
      {"face": {"axis": "y", "at": 0.0}, "dof": "y"},
      {"face": {"axis": "z", "at": 0.0}, "dof": "z"}
    ],
    "displacement": [{"face": {"axis": "x", "at": 2.0}, "dof": "x"}]
  },
  "schedule": [
    {"displacement": 0.02, "steps": 4},
    {"displacement": 0.0, "steps": 2}
  ],
  "data": {"n1": 50, "n2": 200, "n_p": 2, "seed": 3, "dir": "data"},
  "output": "out",
  "study": {"n2": [10, 100], "n_p": [1, 2], "seeds": [1]}
}"#;

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bar.json"), BAR).unwrap();
    dir
}

#[test]
fn gen_data_is_reproducible() {
    let dir = setup();
    let o = hwdd(&["gen-data", "--config", "bar.json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("yield points: 50"));
    assert!(text.contains("tensile records: 400"));
    assert!(text.contains("seed: 3"));
    let first = fs::read(dir.path().join("data/tensile.csv")).unwrap();
    let yields = fs::read(dir.path().join("data/yield_points.csv")).unwrap();
    assert!(String::from_utf8_lossy(&yields).starts_with("theta,rho\n"));
    let o = hwdd(&["gen-data", "--config", "bar.json", "--out", "again"], dir.path());
    assert!(o.status.success());
    assert_eq!(first, fs::read(dir.path().join("again/tensile.csv")).unwrap());
    assert_eq!(yields, fs::read(dir.path().join("again/yield_points.csv")).unwrap());
}

#[test]
fn run_and_compare() {
    let dir = setup();
    assert!(hwdd(&["gen-data", "--config", "bar.json"], dir.path()).status.success());
    for (solver, out) in [("datadriven", "dd"), ("reference", "ref")] {
        let o = hwdd(&["run", "--config", "bar.json", "--solver", solver, "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert!(text.contains("max displacement"), "{text}");
        assert!(text.contains("max principal stress"), "{text}");
        assert!(dir.path().join(out).join("steps/step_0006_nodes.csv").exists());
    }
    let o = hwdd(&["compare", "dd", "ref", "--out", "cmp"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("rmsd"));
    let errors = fs::read_to_string(dir.path().join("cmp/errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 7);

    let o = hwdd(&["compare", "ref", "ref"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("rmsd: 0.000000e0"), "{}", stdout(&o));
}

#[test]
fn mismatched_runs_and_missing_data_fail() {
    let dir = setup();
    let short = BAR.replace(r#"{"displacement": 0.0, "steps": 2}"#, r#"{"displacement": 0.0, "steps": 1}"#);
    fs::write(dir.path().join("short.json"), short).unwrap();
    // no data generated yet
    let o = hwdd(&["run", "--config", "bar.json", "--solver", "datadriven"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("yield_points.csv"));

    assert!(hwdd(&["run", "--config", "bar.json", "--solver", "reference", "--out", "a"], dir.path()).status.success());
    assert!(hwdd(&["run", "--config", "short.json", "--solver", "reference", "--out", "b"], dir.path()).status.success());
    let o = hwdd(&["compare", "a", "b"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("layout mismatch"));
}

#[test]
fn bad_config_and_environment_rejected() {
    let dir = setup();
    fs::write(dir.path().join("typo.json"), r#"{"sheduel": []}"#).unwrap();
    let o = hwdd(&["gen-data", "--config", "typo.json"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("sheduel"));

    let o = hwdd(&["run", "--config", "bar.json", "--solver", "magic"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("datadriven, reference"));

    let o = Command::new(env!("CARGO_BIN_EXE_hwdd"))
        .args(["gen-data", "--config", "bar.json"])
        .current_dir(dir.path())
        .env("HWDD_THREADS", "many")
        .output()
        .unwrap();
    assert!(!o.status.success());
}

#[test]
fn zero_load_gives_zero_fields() {
    let dir = setup();
    let zero = BAR.replace("0.02", "0.0");
    fs::write(dir.path().join("zero.json"), zero).unwrap();
    assert!(hwdd(&["gen-data", "--config", "zero.json"], dir.path()).status.success());
    for solver in ["datadriven", "reference"] {
        let o = hwdd(&["run", "--config", "zero.json", "--solver", solver, "--out", solver], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let nodes = fs::read_to_string(dir.path().join(solver).join("steps/step_0004_nodes.csv")).unwrap();
        for line in nodes.lines().skip(1) {
            let vals: Vec<f64> = line.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
            assert!(vals.iter().all(|&v| v == 0.0), "{line}");
        }
    }
}

#[test]
fn study_writes_one_row_per_cell() {
    let dir = setup();
    let o = hwdd(&["study", "--config", "bar.json", "--out", "study"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("study/study.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n2,n_p,seed,rmsd,steps,mesh,wallclock_s");
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.split(',').nth(2) == Some("1")));
    assert!(dir.path().join("study/study_steps.csv").exists());
}

#[test]
fn study_with_failing_cell_exits_nonzero() {
    let dir = setup();
    let bad = BAR.replace(r#""dir": "data""#, r#""dir": "data", "plan": {"kind": "staggered", "strain_max": 1e-6}"#);
    fs::write(dir.path().join("bad.json"), bad).unwrap();
    let o = hwdd(&["study", "--config", "bad.json", "--out", "study"], dir.path());
    assert!(!o.status.success());
    let status = fs::read_to_string(dir.path().join("study/study_status.csv")).unwrap();
    assert!(status.contains("failed"));
}
