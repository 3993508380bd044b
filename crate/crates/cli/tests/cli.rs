use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

fn hysrd(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hysrd"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn reference_run_completes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("reference");
    let o = hysrd(&["run", "--scenario", s.to_str().unwrap(), "--quiet"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let ts = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert!(ts.starts_with("t,b,margin,E_m,drift1,drift2,status\n"), "{}", &ts[..80]);
    assert_eq!(ts.lines().count(), 1002);
    let snap = fs::read_to_string(dir.path().join("snapshot_t0.5.csv")).unwrap();
    assert!(snap.starts_with("x,u1,u2,v1,xi,w1\n"));
    assert_eq!(snap.lines().count(), 202);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "completed");
    assert_eq!(report["rows"].as_array().unwrap().len(), 1001);
}

#[test]
fn tangency_run_exits_with_transversality_code() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("tangency");
    let o = hysrd(&["run", "--scenario", s.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("transversality_lost"), "{stdout}");
    let ts = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert!(ts.trim_end().ends_with("transversality_lost"));
}

#[test]
fn missing_scenario_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = hysrd(&["run", "--scenario", "/nonexistent/none.toml"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&hysrd(&["run", "--frobnicate"], dir.path())), 1);
}

#[test]
fn converge_needs_three_levels() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("smooth");
    let o = hysrd(&["converge", "--scenario", s.to_str().unwrap(), "--levels", "1"], dir.path());
    assert_eq!(code(&o), 1);
    let o = hysrd(&["converge", "--scenario", s.to_str().unwrap(), "--levels", "3", "--quiet"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("converge.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn relay_trace_handles_empty_and_regular_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.csv");
    fs::write(&input, "t,u1,u2\n").unwrap();
    let o = hysrd(&["relay-trace", "--input", input.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("relay_trace.csv")).unwrap(), "t,zeta,w1\n");

    // Bacteria thresholds: u1 ≥ 2 switches on at u2 = 1, u1 ≤ 1 switches off.
    fs::write(&input, "0,1.8,1\n1,2.5,1\n2,1.8,1\n3,0.8,1\n").unwrap();
    let o = hysrd(&["relay-trace", "--input", input.to_str().unwrap(), "--zeta0", "-1"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let zetas: Vec<String> = fs::read_to_string(dir.path().join("relay_trace.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(zetas, ["-1", "1", "1", "-1"]);

    fs::write(&input, "0,1\n").unwrap();
    assert_eq!(code(&hysrd(&["relay-trace", "--input", input.to_str().unwrap()], dir.path())), 1);
}

#[test]
fn validate_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = hysrd(&["validate", "--samples", "400"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("validation.json")).unwrap();
    assert!(text.contains("threshold_disjointness"));
}

#[test]
fn outputs_are_deterministic() {
    let s = scenario("reference");
    let read = |args: &[&str], file: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = hysrd(args, dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(dir.path().join(file)).unwrap()
    };
    let run = ["run", "--scenario", s.to_str().unwrap(), "--quiet"];
    assert_eq!(read(&run, "timeseries.csv"), read(&run, "timeseries.csv"));
    let pert = ["perturb", "--scenario", s.to_str().unwrap(), "--eps", "0.05,0.025", "--seed", "7", "--quiet"];
    assert_eq!(read(&pert, "perturb.csv"), read(&pert, "perturb.csv"));
}
