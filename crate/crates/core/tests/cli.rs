use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-net")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn star_chsh_threshold() {
    let csv = stdout(&["threshold", "star", "--ineq", "chsh", "--n", "3"]);
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == "p_cr").unwrap();
    assert_eq!(row[k], "0.8688369618");
}

#[test]
fn byte_identical_reruns() {
    for args in [
        &["figure", "fig4"][..],
        &["threshold", "chain", "--ineq", "fb", "--z", "1..5", "--a", "4,6"],
        &["route", "--from", "2,1,1", "--to", "6,5,3", "--format", "json"],
        &["superadditivity", "nodes", "--a", "6", "--m", "1,10"],
    ] {
        assert_eq!(run(args).stdout, run(args).stdout, "{args:?}");
    }
}

#[test]
fn csv_and_json_carry_the_same_numbers() {
    let csv = stdout(&["threshold", "star", "--ineq", "fb", "--n", "5..8", "--m", "0,1"]);
    let json = stdout(&["threshold", "star", "--ineq", "fb", "--n", "5..8", "--m", "0,1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let rows = v.as_array().unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == "p_cr").unwrap();
    let csv_values: Vec<String> = lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect();
    let json_values: Vec<String> = rows.iter().map(|r| r["p_cr"].to_string()).collect();
    assert_eq!(csv_values, json_values);
    assert_eq!(csv_values.len(), 8);
}

#[test]
fn superadditivity_searches() {
    let csv = stdout(&["superadditivity", "coordination", "--z", "1..3"]);
    let a: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(a, ["7", "6", "6"]);
    let csv = stdout(&["superadditivity", "nodes", "--a", "6", "--m", "10"]);
    assert!(csv.lines().nth(1).unwrap().contains(",69"));
}

#[test]
fn route_table_row() {
    let json = stdout(&["route", "--from", "2,1,1", "--to", "3,2,4", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["plan"]["equivalent"]["z"], 2);
    assert_eq!(v["plan"]["ghz_nodes"], serde_json::json!([[2, 2], [3, 2]]));
}

#[test]
fn output_file() {
    let dir = std::env::temp_dir().join(format!("nonlocal-net-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("fig5.csv");
    let out = run(&["figure", "fig5", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&["figure", "fig5"]));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| run(args).status.code().unwrap();
    assert_eq!(code(&["threshold", "star", "--ineq", "chsh", "--n", "1"]), 2);
    assert_eq!(code(&["threshold", "star", "--ineq", "bogus", "--n", "3"]), 2);
    assert_eq!(code(&["route", "--from", "0,0,1", "--to", "1,0,3", "--convention", "compass"]), 2);
    assert_eq!(code(&["chain", "--z", "20", "--a", "4", "--terminals", "0,1", "--p", "0.9"]), 3);
    assert_eq!(code(&["chain", "--z", "2", "--a", "4", "--terminals", "0,1", "--p", "1.5"]), 2);
    assert_eq!(code(&["validate", "--max-qubits", "13"]), 2);
    assert_eq!(code(&["validate", "--scope", "star", "--max-qubits", "8", "--corrupt-offdiag", "0.9"]), 4);
}

#[test]
fn validate_star_scope_passes() {
    let out = run(&["validate", "--scope", "star", "--max-qubits", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn env_cap() {
    let out = Command::new(env!("CARGO_BIN_EXE_nonlocal-net"))
        .args(["validate", "--scope", "star"])
        .env("NONLOCAL_NET_MAX_QUBITS", "nope")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
