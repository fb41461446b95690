use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use serde_json::Value as Json;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bench(stem: &str) -> PathBuf {
    root().join(format!("benchmarks/{stem}.qil"))
}

fn qil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qil")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Json {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn synth_prints_a_report() {
    let out = qil(&["synth", bench("02_selection").to_str().unwrap(), "--cases", "100"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    assert_eq!(r["status"], "synthesized");
    assert_eq!(r["solution"]["sql"], "SELECT R.* FROM R WHERE R.a > 2 ORDER BY R.rid");
    assert_eq!(r["config"]["cases"], 100);
}

#[test]
fn synth_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.qil");
    std::fs::write(&bad, "fn f(R: rel(a:int)) { return }").unwrap();
    let out = qil(&["synth", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["status"], "error");

    assert_eq!(code(&qil(&["synth", dir.path().join("missing.qil").to_str().unwrap()])), 1);

    let consts = dir.path().join("consts.qil");
    std::fs::write(
        &consts,
        "fn consts(R: rel(a:int)) { var out: list(a:int); for i in 0..size(R) { out.append({a: 1}); } return out; }",
    )
    .unwrap();
    let out = qil(&["synth", consts.to_str().unwrap(), "--cost-bound", "12"]);
    assert_eq!(code(&out), 2);
    assert_eq!(stdout_json(&out)["reason"], "exhausted");
}

#[test]
fn argument_errors_and_help() {
    assert_eq!(code(&qil(&["--help"])), 0);
    assert_eq!(code(&qil(&["synth", "--help"])), 0);
    assert_eq!(code(&qil(&[])), 1);
    assert_eq!(code(&qil(&["synth", "x.qil", "--cost-bound", "many"])), 1);
    assert_eq!(code(&qil(&["frobnicate"])), 1);
}

#[test]
fn bench_writes_json_and_a_table() {
    let dir = tempfile::tempdir().unwrap();
    for stem in ["01_identity", "09_count"] {
        std::fs::copy(bench(stem), dir.path().join(format!("{stem}.qil"))).unwrap();
    }
    let out = qil(&["bench", dir.path().to_str().unwrap(), "--cases", "50"]);
    assert_eq!(code(&out), 0);
    let s = stdout_json(&out);
    assert_eq!((s["total"].as_u64(), s["synthesized"].as_u64()), (Some(2), Some(2)));
    let table = String::from_utf8_lossy(&out.stderr);
    assert!(table.contains("identity") && table.contains("2 benchmarks: 2 synthesized"), "{table}");

    std::fs::write(dir.path().join("zz.qil"), "garbage").unwrap();
    assert_eq!(code(&qil(&["bench", dir.path().to_str().unwrap(), "--cases", "10"])), 1);
    assert_eq!(code(&qil(&["bench", dir.path().join("nope").to_str().unwrap()])), 1);
}

#[test]
fn replay_compares_both_sides() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.json");
    std::fs::write(&input, r#"{"R": {"schema": [["a","int"],["b","text"]], "rows": [[3,"x"],[2,"y"],[4,"z"]]}}"#).unwrap();
    let file = bench("02_selection");
    let file = file.to_str().unwrap();
    let report = dir.path().join("report.json");
    let out = qil(&["synth", file, "--cases", "10"]);
    std::fs::write(&report, &out.stdout).unwrap();

    let out = qil(&["replay", file, "--input", input.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["interpreter"]["rows"], serde_json::json!([[3, "x"], [4, "z"]]));

    let out = qil(&["replay", file, "--input", input.to_str().unwrap(), "--solution", report.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["agree"], true);

    let wrong = dir.path().join("wrong.sql");
    std::fs::write(&wrong, "SELECT R.* FROM R WHERE R.a > 1 ORDER BY R.rid").unwrap();
    let out = qil(&["replay", file, "--input", input.to_str().unwrap(), "--solution", wrong.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert_eq!(stdout_json(&out)["agree"], false);

    std::fs::write(&input, "{not json").unwrap();
    assert_eq!(code(&qil(&["replay", file, "--input", input.to_str().unwrap()])), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn garbage_sources_exit_cleanly(bytes in prop::collection::vec(any::<u8>(), 0..200), kernelish in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.qil");
        let mut content = if kernelish { b"fn g(R: rel(a:int)) { ".to_vec() } else { Vec::new() };
        content.extend(bytes);
        std::fs::write(&path, content).unwrap();
        let out = qil(&["synth", path.to_str().unwrap(), "--cases", "5", "--cost-bound", "8"]);
        prop_assert_eq!(code(&out), 1);
        prop_assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
        prop_assert_eq!(&stdout_json(&out)["status"], "error");
    }
}

#[test]
fn reports_conform_to_the_published_schema() {
    let schema: Json = serde_json::from_str(&std::fs::read_to_string(root().join("docs/report.schema.json")).unwrap()).unwrap();
    let validator = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.qil");
    std::fs::write(&bad, "nonsense").unwrap();
    let runs = [
        qil(&["synth", bench("06_equi_join").to_str().unwrap(), "--cases", "20", "--timing"]),
        qil(&["synth", bench("10_max").to_str().unwrap(), "--cases", "20", "--timeout", "0"]),
        qil(&["synth", bad.to_str().unwrap()]),
    ];
    for out in &runs {
        let report = stdout_json(out);
        let msgs: Vec<String> = match validator.validate(&report) {
            Ok(()) => continue,
            Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
        };
        panic!("{msgs:?}\n{report:#}");
    }
}
