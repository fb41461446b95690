use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use qil_core::frontend::Ty;
use qil_core::synth::*;
use qil_core::tor::*;
use qil_core::types::{Field, ScalarType, Schema};
use qil_core::verify::validate;
use qil_core::{load, TypedProgram};

fn bench(stem: &str) -> TypedProgram {
    let path = format!("{}/../../benchmarks/{stem}.qil", env!("CARGO_MANIFEST_DIR"));
    load(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn schema(fields: &[(&str, ScalarType)]) -> Arc<Schema> {
    Arc::new(Schema::new(fields.iter().map(|(n, t)| Field::new(*n, *t)).collect()))
}

fn texts(cs: &[Candidate]) -> Vec<String> {
    cs.iter().map(Candidate::to_text).collect()
}

/// One loop over R(a:int, b:int, t:text) with a guarded break, returning a
/// list(a:int, b:int); vocabulary `<`, `=`, the literals 1 and "x" and an
/// int parameter k.
fn tiny_template() -> Template {
    Template {
        relations: vec![(
            "R".into(),
            schema(&[("a", ScalarType::Int), ("b", ScalarType::Int), ("t", ScalarType::Text)]),
        )],
        scalar_params: vec![("k".into(), ScalarType::Int)],
        int_constants: BTreeSet::from([1]),
        text_constants: BTreeSet::from(["x".to_string()]),
        cmps: BTreeSet::from([CmpOp::Lt, CmpOp::Eq]),
        has_append: true,
        has_break: true,
        loops: vec![LoopNode { id: 0, index: "i".into(), relation: "R".into(), parent: None, has_break: true }],
        live: vec![LiveVar {
            name: "out".into(),
            ty: Ty::List(schema(&[("a", ScalarType::Int), ("b", ScalarType::Int)])),
            loops: vec![0],
        }],
        result: "out".into(),
        ..Template::default()
    }
}

/// Independent generation of the single-loop grammar for [`tiny_template`]:
/// `[Top k] [Proj F] [Sel P] Query(R)` with `P` a conjunction of at most
/// three distinct literals in text order.
fn brute_force(bound: usize) -> Vec<String> {
    let f = |c: &str| Operand::Field(ColRef::new("R", c));
    let mut lits = vec![
        Pred::Atom(CmpOp::Lt, f("a"), f("b")),
        Pred::Atom(CmpOp::Lt, f("b"), f("a")),
        Pred::Atom(CmpOp::Eq, f("a"), f("b")),
        Pred::Atom(CmpOp::Eq, f("t"), Operand::Text("x".into())),
    ];
    for c in ["a", "b"] {
        for op in [CmpOp::Lt, CmpOp::Eq] {
            lits.push(Pred::Atom(op, f(c), Operand::Int(1)));
            lits.push(Pred::Atom(op, f(c), Operand::Var("k".into())));
        }
    }
    lits.sort_by_key(pred_text);
    let n = lits.len();
    let mut preds = vec![None];
    for x in 0..n {
        preds.push(Some(lits[x].clone()));
        for y in x + 1..n {
            preds.push(Some(Pred::And(vec![lits[x].clone(), lits[y].clone()])));
            for z in y + 1..n {
                preds.push(Some(Pred::And(vec![lits[x].clone(), lits[y].clone(), lits[z].clone()])));
            }
        }
    }
    let projs = [None, Some(vec![ColRef::new("R", "a"), ColRef::new("R", "b")]), Some(vec![ColRef::new("R", "b"), ColRef::new("R", "a")])];
    let tops = [None, Some(ScalarExpr::Int(1)), Some(ScalarExpr::Var("k".into()))];
    let build = |src: TorExpr, p: &Option<Pred>, f: &Option<Vec<ColRef>>, k: &Option<ScalarExpr>| {
        let mut e = src;
        if let Some(p) = p {
            e = TorExpr::Sel(Box::new(e), p.clone());
        }
        if let Some(f) = f {
            e = TorExpr::Proj(Box::new(e), f.clone());
        }
        if let Some(k) = k {
            e = TorExpr::Top(Box::new(e), k.clone());
        }
        e
    };
    let mut out = Vec::new();
    for p in &preds {
        for fs in &projs {
            // Without a projection the row shape differs from the target.
            if fs.is_none() {
                continue;
            }
            for k in &tops {
                let post = build(TorExpr::Query("R".into()), p, fs, k);
                let def = build(
                    TorExpr::Top(Box::new(TorExpr::Query("R".into())), ScalarExpr::Var("i".into())),
                    p,
                    fs,
                    k,
                );
                let cand = Candidate {
                    invariants: vec![LoopInvariant {
                        loop_id: 0,
                        index: "i".into(),
                        relation: "R".into(),
                        defs: vec![("out".into(), def)],
                    }],
                    result: "out".into(),
                    post,
                };
                if cand.cost() <= bound {
                    out.push((cand.cost(), cand.to_text()));
                }
            }
        }
    }
    out.sort();
    out.into_iter().map(|(_, t)| t).collect()
}

#[test]
fn templates_collect_program_vocabulary() {
    let t = extract_template(&bench("12_topk"));
    assert!(t.has_break && t.has_append);
    assert_eq!(t.scalar_params, vec![("k".to_string(), ScalarType::Int)]);
    assert!(t.cmps.contains(&CmpOp::Lt) && t.cmps.contains(&CmpOp::Ge));
    assert_eq!(t.int_constants, BTreeSet::from([1]));

    let t = extract_template(&bench("06_equi_join"));
    assert_eq!(t.nesting(), 2);
    assert_eq!(t.loops[1].parent, Some(0));
    assert_eq!((t.loops[0].relation.as_str(), t.loops[1].relation.as_str()), ("R", "S"));

    assert_eq!(extract_template(&bench("08_sum")).agg_kinds, BTreeSet::from([AggKind::Sum]));
    assert_eq!(extract_template(&bench("09_count")).agg_kinds, BTreeSet::from([AggKind::Count]));
    assert_eq!(extract_template(&bench("10_max")).agg_kinds, BTreeSet::from([AggKind::Max]));
}

#[test]
fn enumeration_matches_brute_force_grammar() {
    for bound in [6, 9, 12, 40] {
        assert_eq!(texts(&enumerate(&tiny_template(), bound)), brute_force(bound), "bound {bound}");
    }
}

#[test]
fn enumeration_is_deterministic_and_ordered() {
    let a = enumerate(&tiny_template(), 40);
    let b = enumerate(&tiny_template(), 40);
    assert!(a.len() > 1000);
    assert_eq!(texts(&a[..1000]), texts(&b[..1000]));
    let keys: Vec<(usize, String)> = a.iter().map(|c| (c.cost(), c.to_text())).collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn lower_bounds_prune_exactly_the_costly_candidates() {
    for stem in ["04_sel_proj", "12_topk", "08_sum", "05_cross_join"] {
        let tpl = extract_template(&bench(stem));
        let all = enumerate(&tpl, 30);
        for bound in [5, 8, 14, 19] {
            let expect: Vec<String> = all.iter().filter(|c| c.cost() <= bound).map(Candidate::to_text).collect();
            assert_eq!(texts(&enumerate(&tpl, bound)), expect, "{stem} at {bound}");
        }
    }
}

#[test]
fn tiny_bound_enumerates_nothing() {
    assert!(enumerate(&extract_template(&bench("02_selection")), 1).is_empty());
}

#[test]
fn no_aggregates_without_accumulators() {
    let tpl = extract_template(&bench("04_sel_proj"));
    assert!(tpl.agg_kinds.is_empty());
    for c in enumerate(&tpl, 24) {
        c.post.visit(&mut |e| assert!(!matches!(e, TorExpr::Agg(..)), "{c}"));
    }
}

#[test]
fn accepted_solution_is_the_cheapest_valid_candidate() {
    for stem in ["02_selection", "04_sel_proj", "08_sum", "12_topk"] {
        let prog = bench(stem);
        let cfg = SynthConfig::default();
        let out = synthesize(&prog, &cfg);
        let sol = out.solution().unwrap();
        let first_valid = enumerate(&extract_template(&prog), cfg.cost_bound)
            .into_iter()
            .find(|c| validate(&prog, c, &cfg.bounds).is_ok_and(|v| v.is_valid()))
            .unwrap();
        assert_eq!(sol.candidate, first_valid, "{stem}");
        assert_eq!(sol.cost, first_valid.cost());
    }
}

#[test]
fn identity_postcondition_and_sql() {
    let out = synthesize(&bench("01_identity"), &SynthConfig::default());
    let sol = out.solution().unwrap();
    assert_eq!(expr_text(&sol.candidate.post), "(query R)");
    assert_eq!(sol.sql_text, "SELECT R.* FROM R ORDER BY R.rid");
}

#[test]
fn constant_appends_exhaust_the_space() {
    let prog = load(
        "fn consts(R: rel(a:int)) { var out: list(a:int); for i in 0..size(R) { out.append({a: 1}); } return out; }",
    )
    .unwrap();
    let out = synthesize(&prog, &SynthConfig { cost_bound: 12, ..SynthConfig::default() });
    let SynthOutcome::Failed(f) = out else { panic!("unexpected solution") };
    assert_eq!(f.reason, FailureReason::Exhausted);
    assert_eq!(f.stats.candidates_tried, f.stats.candidates_enumerated);
}

#[test]
fn zero_timeout_fails_before_checking() {
    let out = synthesize(&bench("02_selection"), &SynthConfig { timeout_seconds: Some(0.0), ..SynthConfig::default() });
    let SynthOutcome::Failed(f) = out else { panic!("unexpected solution") };
    assert_eq!(f.reason, FailureReason::Timeout);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let prog = bench("04_sel_proj");
    let runs: BTreeMap<usize, String> = [1, 2, 4]
        .into_iter()
        .map(|jobs| {
            let out = synthesize(&prog, &SynthConfig { jobs, ..SynthConfig::default() });
            let sol = out.solution().unwrap();
            (jobs, format!("{} {:?}", sol.candidate, sol.stats))
        })
        .collect();
    assert_eq!(runs[&1], runs[&2]);
    assert_eq!(runs[&1], runs[&4]);
}
