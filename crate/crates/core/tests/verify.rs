use std::collections::BTreeMap;
use std::sync::OnceLock;

use qil_core::synth::{synthesize, Candidate, SynthConfig};
use qil_core::tor::{parse_expr, TorEnv};
use qil_core::types::{Scalar, Value};
use qil_core::verify::*;
use qil_core::{load, run, Bindings, TypedProgram};

const SELECTION: &str = "(candidate
  (loop L0 (bound i R) (def out (sel (> (field R.a) 2) (top (query R) i))))
  (post out (sel (> (field R.a) 2) (query R))))";

fn bench_files() -> Vec<std::path::PathBuf> {
    let mut files: Vec<_> = std::fs::read_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/../../benchmarks"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
}

fn bench(stem: &str) -> TypedProgram {
    let f = bench_files().into_iter().find(|p| p.file_stem().unwrap() == stem).unwrap();
    load(&std::fs::read_to_string(f).unwrap()).unwrap()
}

/// Synthesized candidates for the whole corpus, computed once.
fn solved() -> &'static BTreeMap<String, Candidate> {
    static CELL: OnceLock<BTreeMap<String, Candidate>> = OnceLock::new();
    CELL.get_or_init(|| {
        bench_files()
            .iter()
            .map(|f| {
                let stem = f.file_stem().unwrap().to_string_lossy().into_owned();
                let prog = load(&std::fs::read_to_string(f).unwrap()).unwrap();
                let out = synthesize(&prog, &SynthConfig::default());
                let cand = out.solution().unwrap_or_else(|| panic!("{stem} unsolved")).candidate.clone();
                (stem, cand)
            })
            .collect()
    })
}

fn tor_env(b: &Bindings) -> TorEnv {
    let mut env = TorEnv::new();
    for (name, v) in b {
        match v {
            Value::Rel(r) => env.bind_relation(name, r),
            Value::Int(x) => env.bind_int(name, *x),
            Value::Text(t) => env.bind_scalar(name, Scalar::Text(t.clone())),
            other => panic!("unexpected input {other}"),
        }
    }
    env
}

fn mutate(src: &str, from: &str, to: &str) -> Candidate {
    assert!(src.contains(from));
    Candidate::parse(&src.replace(from, to)).unwrap()
}

#[test]
fn condition_counts_follow_loop_shape() {
    let count = |stem: &str| gen_vcs(&bench(stem), &solved()[stem]).unwrap().len();
    assert_eq!(count("02_selection"), 3);
    assert_eq!(count("12_topk"), 4);
    assert_eq!(count("05_cross_join"), 6);
    assert_eq!(count("06_equi_join"), 6);
}

#[test]
fn selection_invariant_is_valid_and_instances_match_analytic_counts() {
    let prog = bench("02_selection");
    let cand = Candidate::parse(SELECTION).unwrap();
    let space = InputSpace::new(&prog, &Bounds::default());
    let v = validate_in(&prog, &cand, &space).unwrap();
    assert!(v.verdict.is_valid());
    assert_eq!(v.vcs_checked, 3);
    let mut total = 0;
    for vc in gen_vcs(&prog, &cand).unwrap() {
        let out = check(&prog, &cand, vc, &space).unwrap();
        assert_eq!(out.instances, analytic_instances(&prog, vc, &space), "{vc}");
        total += out.instances;
    }
    assert_eq!(v.instances, total);
}

#[test]
fn off_by_one_comparison_is_caught_at_two() {
    let prog = bench("02_selection");
    let cand = mutate(SELECTION, "(> (field R.a) 2)", "(>= (field R.a) 2)");
    let Verdict::Counterexample(cex) = validate(&prog, &cand, &Bounds::default()).unwrap() else {
        panic!("mutant accepted")
    };
    assert!(replay(&prog, &cand, &cex).unwrap());
    let Value::Rel(r) = &cex.inputs["R"] else { unreachable!() };
    assert!(r.rows.iter().any(|row| row[0] == Scalar::Int(2)), "{:?}", r.rows);
}

#[test]
fn wrong_postcondition_fails_at_exit() {
    let prog = bench("02_selection");
    let cand = mutate(SELECTION, "(post out (sel (> (field R.a) 2) (query R)))", "(post out (query R))");
    let Verdict::Counterexample(cex) = validate(&prog, &cand, &Bounds::default()).unwrap() else {
        panic!("mutant accepted")
    };
    assert_eq!(cex.vc.kind, VcKind::Exit);
    assert!(replay(&prog, &cand, &cex).unwrap());
}

#[test]
fn missing_inner_definition_is_not_checkable() {
    let prog = bench("05_cross_join");
    let mut cand = solved()["05_cross_join"].clone();
    cand.invariants[1].defs.clear();
    assert!(matches!(validate(&prog, &cand, &Bounds::default()), Err(VerifyError::NonCheckable(_))));
}

#[test]
fn earliest_failing_condition_matches_per_condition_checks() {
    let prog = bench("02_selection");
    let space = InputSpace::new(&prog, &Bounds::default());
    let mutants = [
        mutate(SELECTION, "(> (field R.a) 2)", "(>= (field R.a) 2)"),
        mutate(SELECTION, "(> (field R.a) 2) (top (query R) i)", "(> (field R.a) 1) (top (query R) (+ i 1))"),
        mutate(SELECTION, "(post out (sel (> (field R.a) 2) (query R)))", "(post out (query R))"),
        mutate(SELECTION, "(sel (> (field R.a) 2) (top (query R) i))", "(top (query R) i)"),
    ];
    for cand in &mutants {
        let first = gen_vcs(&prog, cand)
            .unwrap()
            .into_iter()
            .find_map(|vc| match check(&prog, cand, vc, &space).unwrap().verdict {
                Verdict::Valid => None,
                Verdict::Counterexample(c) => Some(c),
            })
            .unwrap_or_else(|| panic!("no failing condition for {cand}"));
        let Verdict::Counterexample(got) = validate_in(&prog, cand, &space).unwrap().verdict else { panic!() };
        assert_eq!(got, first);
        assert!(replay(&prog, cand, &got).unwrap());
    }
}

#[test]
fn accepted_candidates_are_sound_on_the_whole_space() {
    for (stem, cand) in solved() {
        let prog = bench(stem);
        let space = InputSpace::new(&prog, &Bounds::default());
        assert!(validate_in(&prog, cand, &space).unwrap().verdict.is_valid(), "{stem}");
        for input in space.iter() {
            let expected = run(&prog, &input).unwrap();
            let got = tor_env(&input).eval(&cand.post).unwrap();
            assert!(expected.equivalent(&got), "{stem}: {expected} vs {got}");
        }
    }
}

#[test]
fn validation_is_deterministic() {
    let prog = bench("02_selection");
    let cand = mutate(SELECTION, "(> (field R.a) 2)", "(> (field R.a) 1)");
    let a = validate(&prog, &cand, &Bounds::default()).unwrap();
    assert_eq!(a, validate(&prog, &cand, &Bounds::default()).unwrap());
    assert!(!a.is_valid());
}

#[test]
fn postcondition_parses_from_text() {
    assert_eq!(Candidate::parse(SELECTION).unwrap().post, parse_expr("(sel (> (field R.a) 2) (query R))").unwrap());
}
