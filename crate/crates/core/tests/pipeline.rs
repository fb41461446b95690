use qil_core::emit::{parse_sql, SqlQuery};
use qil_core::pipeline::*;
use qil_core::types::{Scalar, Value};
use qil_core::{load, TypedProgram};

fn bench_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks")
}

fn bench_src(stem: &str) -> String {
    std::fs::read_to_string(bench_dir().join(format!("{stem}.qil"))).unwrap()
}

fn bench(stem: &str) -> TypedProgram {
    load(&bench_src(stem)).unwrap()
}

fn quick() -> PipelineConfig {
    PipelineConfig { cases: 200, ..PipelineConfig::default() }
}

/// Reference SplitMix64 step.
fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[test]
fn inputs_follow_the_documented_stream() {
    let prog = bench("12_topk");
    let g = GenConfig::default();
    let mut master = 42u64;
    for (c, seed) in case_seeds(42, 50).into_iter().enumerate() {
        assert_eq!(seed, splitmix(&mut master), "case {c}");
        let mut s = seed;
        let n = (splitmix(&mut s) % 6) as usize;
        let mut rows = Vec::new();
        for _ in 0..n {
            let a = Scalar::Int((splitmix(&mut s) % 5) as i64);
            let b = Scalar::text(["a", "b", "c"][(splitmix(&mut s) % 3) as usize]);
            rows.push(vec![a, b]);
        }
        let k = (splitmix(&mut s) % 5) as i64;
        let input = random_input(&prog, seed, &g);
        assert_eq!(input["R"].as_rel().unwrap().rows, rows);
        assert_eq!(input["k"], Value::Int(k));
    }
}

#[test]
fn difftest_passes_the_right_query_and_catches_a_wrong_one() {
    let prog = bench("02_selection");
    let g = GenConfig::default();
    let good = parse_sql("SELECT R.* FROM R WHERE R.a > 2 ORDER BY R.rid").unwrap();
    assert_eq!(difftest(&prog, &good, 500, 0, &g, 1).failures, 0);

    let bad: SqlQuery = parse_sql("SELECT R.* FROM R WHERE R.a > 1 ORDER BY R.rid").unwrap();
    let res = difftest(&prog, &bad, 500, 0, &g, 1);
    assert!(res.failures > 0);
    let first = res.first_failure.unwrap();
    // The reported case is the lowest failing one and reproduces.
    let seeds = case_seeds(0, 500);
    for c in 0..first.case {
        assert!(compare(&prog, &bad, &random_input(&prog, seeds[c], &g)).is_ok());
    }
    assert!(compare(&prog, &bad, &random_input(&prog, seeds[first.case], &g)).is_err());
    assert_eq!(difftest(&prog, &bad, 500, 0, &g, 3), difftest(&prog, &bad, 500, 0, &g, 1));
}

#[test]
fn selection_report() {
    let r = run_source("02_selection.qil", &bench_src("02_selection"), &quick());
    assert_eq!(r.status, Status::Synthesized);
    assert_eq!(r.exit_code(), 0);
    assert_eq!(r.program_name, "selection");
    let sol = r.solution.as_ref().unwrap();
    assert_eq!(sol.sql, "SELECT R.* FROM R WHERE R.a > 2 ORDER BY R.rid");
    assert_eq!(sol.postcondition, "(sel (> (field R.a) 2) (query R))");
    assert_eq!(sol.invariants.len(), 1);
    assert_eq!(sol.invariants[0].defs[0].expr, "(sel (> (field R.a) 2) (top (query R) i))");
    assert_eq!(r.difftest.as_ref().unwrap().failures, 0);
    assert!(r.stats.candidates_tried >= 1 && r.stats.candidates_tried <= r.stats.candidates_enumerated);
    assert_eq!(r.to_json(), run_source("02_selection.qil", &bench_src("02_selection"), &quick()).to_json());
}

#[test]
fn malformed_source_is_an_error() {
    let r = run_source("bad.qil", "fn broken( {", &quick());
    assert_eq!(r.status, Status::Error);
    assert_eq!(r.exit_code(), 1);
    assert!(r.error.as_deref().unwrap().starts_with("parse error at 1:"), "{:?}", r.error);
    assert!(r.solution.is_none());
}

#[test]
fn untranslatable_kernel_fails_exhausted() {
    let src = "fn consts(R: rel(a:int)) { var out: list(a:int); for i in 0..size(R) { out.append({a: 1}); } return out; }";
    let mut cfg = quick();
    cfg.synth.cost_bound = 12;
    let r = run_source("consts.qil", src, &cfg);
    assert_eq!(r.status, Status::Failed);
    assert_eq!(r.reason.as_deref(), Some("exhausted"));
    assert_eq!(r.exit_code(), 2);
}

#[test]
fn benchmark_directories() {
    let empty = tempfile::tempdir().unwrap();
    let s = run_benchmarks(empty.path(), &quick()).unwrap();
    assert_eq!((s.total, s.exit_code()), (0, 0));

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a_sum.qil"), bench_src("08_sum")).unwrap();
    std::fs::write(dir.path().join("b_bad.qil"), "fn nope(").unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let s = run_benchmarks(dir.path(), &quick()).unwrap();
    assert_eq!((s.total, s.synthesized, s.errors), (2, 1, 1));
    assert_eq!(s.exit_code(), 1);
    assert_eq!(s.benchmarks[0].program_name, "sum");
    assert!(s.table().contains("2 benchmarks: 1 synthesized, 0 failed, 1 errors"));
}

#[test]
fn report_fields_are_camel_case_and_timing_is_opt_in() {
    let r = run_source("08_sum.qil", &bench_src("08_sum"), &quick());
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for key in ["programName", "file", "status", "solution", "stats", "difftest", "config"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert!(json.get("timing").is_none());
    assert_eq!(json["config"]["costBound"], 24);
    assert_eq!(json["config"]["bounds"]["maxRelationSize"], 3);
    assert!(json["config"].get("jobs").is_none());
    assert_eq!(json["solution"]["sql"], "SELECT COALESCE(SUM(R.a), 0) FROM R");

    let timed = run_source("08_sum.qil", &bench_src("08_sum"), &PipelineConfig { timing: true, ..quick() });
    let t = timed.timing.unwrap();
    assert!(t.wall_seconds >= 0.0 && t.jobs == 1);
}
