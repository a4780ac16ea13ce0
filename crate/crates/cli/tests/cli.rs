use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn domset(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_domset"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

const C6: &str = "# six-cycle\nn 6\n0 1\n1 2\n2 3\n\n3 4\n4 5\n5 0\n";

#[test]
fn mds_report_has_the_schema() {
    for cmd in ["mds-n", "mds-delta"] {
        let out = domset(&[cmd, "--epsilon", "0.25"], C6);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert_eq!(v["graph"], serde_json::json!({"n": 6, "m": 6, "delta": 2}));
        assert_eq!(v["params"]["epsilon"], 0.25);
        let stages = v["stages"].as_array().unwrap();
        assert!(!stages.is_empty());
        for s in stages {
            for key in ["name", "size", "fractionality", "sim_rounds", "charged_rounds"] {
                assert!(s.get(key).is_some(), "stage lacks {key}");
            }
        }
        let f = &v["final"];
        assert_eq!(f["valid"], true);
        assert_eq!(f["opt"], 2.0);
        assert!(f.get("connected").is_none());
        let size = f["size"].as_u64().unwrap();
        assert_eq!(v["set"].as_array().unwrap().len() as u64, size);
        assert!(f["ratio"].as_f64().unwrap() <= f["ratio_bound"].as_f64().unwrap());
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = ["mds-n", "--seed", "9", "--cost-model", "local"];
    assert_eq!(domset(&args, C6).stdout, domset(&args, C6).stdout);
}

#[test]
fn cds_reports_connectivity() {
    let out = domset(&["cds"], C6);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["final"]["connected"], true);
    assert_eq!(v["final"]["opt"], 4.0);
    let set: Vec<String> = v["set"].as_array().unwrap().iter().map(|x| x.to_string()).collect();
    let check = domset(&["verify", "--connected", "--set", &set.join(",")], C6);
    assert!(check.status.success());
}

#[test]
fn text_report() {
    let out = domset(&["mds-delta", "--report", "text"], "0 1\n0 2\n0 3\n");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("graph n=4 m=3 delta=3\n"));
    assert!(text.contains("final size=1 valid=true"));
    assert!(text.ends_with("set 0\n"));
}

#[test]
fn oracle_values() {
    let v = json(&domset(&["oracle", "cds"], "0 1\n1 2\n2 3\n"));
    assert_eq!(v["size"], 2);
    assert_eq!(v["witness"], serde_json::json!([1, 2]));
    let v = json(&domset(&["oracle", "mds"], C6));
    assert_eq!(v["size"], 2);
}

#[test]
fn gen_is_parseable_and_deterministic() {
    let a = domset(&["gen", "gnp", "--n", "12", "--p", "0.3", "--seed", "5"], "");
    let b = domset(&["gen", "gnp", "--n", "12", "--p", "0.3", "--seed", "5"], "");
    assert_eq!(a.stdout, b.stdout);
    let petersen = domset(&["gen", "petersen"], "");
    let text = String::from_utf8(petersen.stdout).unwrap();
    let v = json(&domset(&["oracle", "mds"], &text));
    assert_eq!(v["size"], 3);
}

#[test]
fn verify_failures_exit_two() {
    let out = domset(&["verify", "--set", "0"], C6);
    assert_eq!(out.status.code(), Some(2));
    let out = domset(&["verify", "--set", "0 3", "--connected"], C6);
    assert_eq!(out.status.code(), Some(2));
    let out = domset(&["verify", "--set", "0 3"], C6);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn preconditions_exit_three() {
    assert_eq!(domset(&["mds-n", "--epsilon", "1.5"], C6).status.code(), Some(3));
    assert_eq!(domset(&["cds"], "0 1\n2 3\n").status.code(), Some(3));
    assert_eq!(domset(&["mds-n"], "0 zero\n").status.code(), Some(3));
    assert_eq!(domset(&["verify", "--set", "7"], C6).status.code(), Some(3));
    assert_eq!(domset(&["gen", "cycle", "--n", "2"], "").status.code(), Some(3));
    assert_eq!(domset(&["mds-n", "--input", "/nonexistent/graph"], "").status.code(), Some(3));
}
