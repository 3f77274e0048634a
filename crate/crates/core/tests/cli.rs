use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use eigen_pointwise::report::{parse_csv, parse_json, CSV_HEADER};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eigen-pointwise")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--domain", "lshape", "--max-dof", "300", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("stop: dof_budget"));

    let csv = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    let rows = parse_csv(&csv).unwrap();
    assert!(rows.len() > 2);
    assert_eq!(rows[0].dof, 33);
    assert!(rows.windows(2).all(|w| w[1].dof > w[0].dof));
    assert!(rows.last().unwrap().dof >= 300);
    assert!(rows.iter().all(|r| r.linf_error.is_none() && r.eta_star.is_none()));

    let history = parse_json(&fs::read_to_string(dir.path().join("history.json")).unwrap()).unwrap();
    assert_eq!(history.records.len(), rows.len());
    assert_eq!(history.config.max_dof, 300);

    let svg = fs::read_to_string(dir.path().join("mesh_final.svg")).unwrap();
    let triangles = history.records.last().unwrap().n_elements;
    assert_eq!(svg.matches("<path").count(), triangles);
    assert!(dir.path().join("mesh_final.mesh").exists());
}

#[test]
fn square_run_fills_error_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--domain", "square", "--max-dof", "400", "--exact-error", "--eta-star", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = parse_csv(&fs::read_to_string(dir.path().join("history.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.linf_error.is_some_and(|e| e > 0.0) && r.eta_star.is_some_and(|s| s > 0.0)));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# smaller run\ndomain = square\nmax_dof = 5000\ntheta = 0.5\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", "--config", path(&cfg), "--max-dof", "200", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let history = parse_json(&fs::read_to_string(out.join("history.json")).unwrap()).unwrap();
    assert_eq!(history.config.max_dof, 200);
    assert_eq!(history.config.theta, 0.5);
}

#[test]
fn invalid_input_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--theta", "1.5", "--out", path(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(0, 1)"));
    assert!(!dir.path().join("history.csv").exists());

    assert_eq!(code(&run(&["run", "--frobnicate"])), 2);
    assert_eq!(code(&run(&["verify", "--levels", "3"])), 2);
    assert_eq!(code(&run(&["verify", "--domain", "lshape"])), 2);
    assert_eq!(code(&run(&["render", path(&dir.path().join("missing.mesh"))])), 2);

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "theta\n").unwrap();
    assert_eq!(code(&run(&["run", "--config", path(&bad), "--out", path(dir.path())])), 2);
}

#[test]
fn verify_passes_on_square() {
    let o = run(&["verify"]);
    let text = stdout(&o);
    assert_eq!(code(&o), 0, "{text}");
    for name in ["levels", "reliability band", "efficiency bound", "eta* band"] {
        assert!(text.contains(&format!("PASS {name}")), "{text}");
    }
}

#[test]
fn verify_without_volume_term_still_passes() {
    // The jump term alone stays equivalent on the smooth benchmark.
    let o = run(&["verify", "--drop-volume-term"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn render_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["run", "--domain", "slit", "--max-dof", "250", "--out", path(dir.path())])), 0);
    let mesh = dir.path().join("mesh_final.mesh");
    let first = dir.path().join("a.svg");
    let second = dir.path().join("b.svg");
    assert_eq!(code(&run(&["render", path(&mesh), "--out", path(&first)])), 0);
    assert_eq!(code(&run(&["render", path(&mesh), "--out", path(&second)])), 0);
    let a = fs::read(&first).unwrap();
    assert_eq!(a, fs::read(&second).unwrap());
    assert_eq!(a, fs::read(dir.path().join("mesh_final.svg")).unwrap());
}
