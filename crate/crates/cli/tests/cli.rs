use std::path::PathBuf;
use std::process::{Command, Output};

use coclass_cli::{Record, Report, Status};
use serde_json::{json, Value};

fn coclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coclass")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("coclass-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn record(status: Status) -> Record {
    Record {
        family: "F".into(),
        claim: "c".into(),
        i: None,
        expected: json!(1),
        computed: json!(1),
        status,
        detail: String::new(),
        runtime_ms: 5,
    }
}

#[test]
fn exit_codes() {
    assert_eq!(Report::new(vec![record(Status::Pass)]).exit_code(false), 0);
    assert_eq!(Report::new(vec![record(Status::Pass), record(Status::Fail)]).exit_code(false), 1);
    let undecided = Report::new(vec![record(Status::Unknown)]);
    assert_eq!(undecided.exit_code(false), 0);
    assert_eq!(undecided.exit_code(true), 1);
    assert_eq!(undecided.without_runtimes()["records"][0]["runtime_ms"], 0);
}

#[test]
fn unknown_family_is_an_error() {
    let out = coclass(&["h2", "G99"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn empty_catalog_gives_empty_report() {
    let dir = scratch_dir("empty");
    let out = coclass(&["verify-paper", "--catalog", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["records"], json!([]));
    assert_eq!((v["pass"].as_u64(), v["fail"].as_u64()), (Some(0), Some(0)));
}

#[test]
fn single_family_catalog_passes() {
    let dir = scratch_dir("g21");
    let src = coclass_core::sequences::bundled_catalog_dir().join("g21.json");
    std::fs::copy(src, dir.join("g21.json")).unwrap();
    let out = coclass(&["verify-paper", "--catalog", dir.to_str().unwrap(), "--i-max", "1", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.lines().all(|l| l.starts_with("PASS") || l.ends_with("0 fail, 0 unknown")), "{text}");
}

#[test]
fn h2_reports_invariants() {
    let out = coclass(&["h2", "G22-S3"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["h2_invariants"], json!([2, 2, 2, 8]));
}

#[test]
fn instantiate_quaternion_row() {
    let out = coclass(&["instantiate", "G21", "--beta", "(8,0,0)", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("quaternion signature: 1 involution"), "{text}");
}

#[test]
fn instantiate_needs_a_choice() {
    assert_eq!(coclass(&["instantiate", "G21"]).status.code(), Some(2));
}

#[test]
fn classify_g21() {
    let out = coclass(&["classify", "G21", "--i", "1"]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["classification"]["partition"], json!([[0], [1], [2, 3]]));
    assert_eq!(v["classification"]["status"], "exact");
}

#[test]
fn graph_formats() {
    let dot = stdout(&coclass(&["graph", "G21", "--i-max", "2", "--format", "dot"]));
    assert!(dot.starts_with("digraph"), "{dot}");
    assert!(dot.contains("\"o=6,d=0\" -> \"o=7,d=0\";"), "{dot}");
    let v: Value = serde_json::from_str(&stdout(&coclass(&["graph", "G21", "--i-max", "1"]))).unwrap();
    assert!(v.is_object());
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let run = |threads: &str| -> Value {
        let out = coclass(&["verify-paper", "--i-max", "1", "--parallel", threads]);
        let mut v: Value = serde_json::from_str(&stdout(&out)).unwrap();
        for r in v["records"].as_array_mut().unwrap() {
            r["runtime_ms"] = json!(0);
        }
        v
    };
    assert_eq!(run("1"), run("4"));
}
