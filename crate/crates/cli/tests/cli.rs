use std::path::PathBuf;
use std::process::{Command, Output};

fn qbpw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbpw")).args(args).output().expect("spawn qbpw")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qbpw-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn built(args: &[&str], name: &str) -> String {
    let path = scratch(name);
    let p = path.to_str().unwrap().to_owned();
    let mut full = vec!["build"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["-o", &p]);
    let o = qbpw(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    p
}

#[test]
fn build_validate_verify_mws() {
    let g = built(&["mws", "--n", "3"], "mws3.json");
    let v = qbpw(&["validate", "--graph", &g]);
    assert!(stdout(&v).contains("well_formed=true unidirectional=true"));
    let o = qbpw(&["verify", "--graph", &g, "--function", "mws"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("PASS"));
    let wrong = qbpw(&["verify", "--graph", &g, "--function", "nd"]);
    assert_eq!(wrong.status.code(), Some(1));
}

#[test]
fn run_disj_prints_distribution() {
    let g = built(&["disj", "--n", "2"], "disj2.json");
    let o = qbpw(&["run", "--graph", &g, "--input", "1001"]);
    assert_eq!(stdout(&o).trim(), "p0=0 p1=1 residual=0");
    let hit = qbpw(&["run", "--graph", &g, "--input", "1010"]);
    assert_eq!(stdout(&hit).trim(), "p0=1 p1=0 residual=0");
}

#[test]
fn classify_reports_read_once() {
    let g = built(&["disj", "--n", "3"], "disj3.json");
    let s = stdout(&qbpw(&["classify", "--graph", &g]));
    assert!(s.contains("read_once=true"), "{s}");
}

#[test]
fn ic_of_classical_copy() {
    let s = stdout(&qbpw(&["ic", "--protocol", "and-classical"]));
    assert!(s.contains("epsilon=0") && s.contains("ic=1 "), "{s}");
}

#[test]
fn bridge_check_on_strict_mws() {
    let g = built(&["mws", "--n", "3"], "mws3b.json");
    let o = qbpw(&["bridge-check", "--graph", &g, "--pair", "2", "--background", "101010"]);
    assert!(o.status.success());
    assert!(stdout(&o).trim_end().ends_with("PASS"));
}

#[test]
fn ind_rect_experiment() {
    let s = stdout(&qbpw(&["experiment", "ind-rect", "--n", "4", "--eps", "0.25"]));
    assert!(s.lines().nth(1).unwrap().starts_with("5,"));
}

#[test]
fn acceptance_subset_as_csv() {
    let o = qbpw(&["acceptance", "--only", "3,12", "--csv"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 3);
    assert!(s.lines().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(qbpw(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qbpw(&["validate", "--graph", "/nonexistent/g.json"]).status.code(), Some(2));
    assert_eq!(qbpw(&["ic", "--protocol", "nonsense"]).status.code(), Some(2));
}
