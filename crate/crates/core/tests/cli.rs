use sbforge::brace::{brace_from_regular, Which};
use sbforge::construct::build_g;
use sbforge::fpalg::{build_frame, validate_prime_pair};
use sbforge::holo::Holomorph;
use serde_json::{json, Value};
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

fn sbforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbforge")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_passes_at_12() {
    let o = sbforge(&["verify", "--p", "2", "--q", "3", "--which", "B", "--effort", "exhaustive"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for line in ["relations=pass", "axioms.brace_relation=pass", "simplicity=pass", "structure=pass", "result=pass"] {
        assert!(s.lines().any(|l| l == line), "missing {line}");
    }
}

#[test]
fn sampled_effort_and_threads() {
    let o = sbforge(&["verify", "--p", "2", "--q", "3", "--effort", "sampled:500", "--threads", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("axioms.brace_relation.checked=500\n"));
}

#[test]
fn aut_summary() {
    let o = sbforge(&["aut", "--p", "3", "--q", "13", "--which", "B"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("order 3, cyclic, generator = conj [[J,0],[0,1]]"));
    let o = sbforge(&["aut", "--p", "2", "--q", "3"]);
    assert!(stdout(&o).contains("raw_sweep=pass"));
}

#[test]
fn classify_summary_and_json() {
    let o = sbforge(&["classify", "--p", "2", "--q", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("simple classes: 2; mutually opposite"));
    let o = sbforge(&["classify", "--p", "2", "--q", "3", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let entries = v.as_array().unwrap();
    assert_eq!(entries.iter().filter(|e| e["simple"] == json!(true)).count(), 2);
    assert!(entries.iter().all(|e| e["dot_tag"] == json!("type_ii")));
}

#[test]
fn build_then_verify_from_file() {
    let dir = tempfile::tempdir().unwrap();
    for which in ["B", "Bopp"] {
        let path = dir.path().join(format!("{which}.json"));
        let o = sbforge(&["build", "--p", "2", "--q", "3", "--which", which, "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let v = read_json(&path);
        assert_eq!(v["which"], json!(which));
        assert_eq!(v["dot"].as_array().unwrap().len(), 12);
        let o = sbforge(&["verify", "--from-file", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        let s = stdout(&o);
        assert!(s.contains("roundtrip=pass\n") && s.contains("simplicity.path=fast\n"));
    }
}

#[test]
fn corrupted_file_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    sbforge(&["build", "--p", "2", "--q", "3", "--out", path.to_str().unwrap()]);
    let mut v = read_json(&path);
    let row = v["circ"][3].as_array_mut().unwrap();
    row.swap(4, 5);
    std::fs::write(&path, v.to_string()).unwrap();
    let o = sbforge(&["verify", "--from-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains(".witness="));
}

#[test]
fn export_structural_to_table() {
    let hol = Arc::new(Holomorph::new(build_frame(validate_prime_pair(2, 3).unwrap()).unwrap()).unwrap());
    let g = build_g(&hol).unwrap();
    let g_map: Vec<Value> = g
        .alphas()
        .iter()
        .map(|a| json!([a.i, a.j, a.w.entries().iter().map(|&x| x as u32).collect::<Vec<_>>()]))
        .collect();
    let structural = json!({
        "n": 12, "p": 2, "q": 3, "which": "B",
        "frame": hol.frame().to_file(),
        "g_map": g_map,
    });
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("s.json");
    let dst = dir.path().join("t.json");
    std::fs::write(&src, structural.to_string()).unwrap();
    let o = sbforge(&["export", "--from-file", src.to_str().unwrap(), "--out", dst.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("layout.in=structural\n"));
    let expected = brace_from_regular(&hol, &g, Which::B).unwrap().to_json();
    assert_eq!(read_json(&dst), expected);
    let o = sbforge(&["verify", "--from-file", src.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn ybe_exports_solution() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let o = sbforge(&["ybe", "--p", "2", "--q", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("braid=pass\n") && s.contains("nondegenerate=pass\n") && s.contains("involutive=false\n"));
    let v = read_json(&path);
    assert_eq!(v["n"], json!(12));
    assert_eq!(v["r"].as_array().unwrap().len(), 12);
    assert_eq!(v["r"][0][5], json!([5, 0]));
}

#[test]
fn json_report_mode() {
    let o = sbforge(&["ybe", "--p", "2", "--q", "3", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["braid"], json!("pass"));
    assert_eq!(v["result"], json!("pass"));
}

#[test]
fn usage_and_budget_exit_codes() {
    assert_eq!(sbforge(&["verify", "--p", "4", "--q", "3"]).status.code(), Some(2));
    assert_eq!(sbforge(&["verify", "--p", "2", "--q", "5"]).status.code(), Some(2));
    assert_eq!(sbforge(&["verify"]).status.code(), Some(2));
    assert_eq!(sbforge(&["verify", "--p", "2", "--q", "3", "--which", "custom"]).status.code(), Some(2));
    assert_eq!(sbforge(&["verify", "--p", "2", "--q", "3", "--effort", "some"]).status.code(), Some(2));
    assert_eq!(sbforge(&["export"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_sbforge"))
        .args(["classify", "--p", "2", "--q", "3"])
        .env("SBFORGE_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn frame_json() {
    let o = sbforge(&["frame", "--p", "2", "--q", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["M"], json!([[0, 1], [1, 1]]));
    assert_eq!(v["J"], json!([[1, 1], [0, 1]]));
}
