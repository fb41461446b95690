#![allow(dead_code)]

//! Exhaustive emission oracle: every translatable expression up to a depth
//! over the vocabulary R(a:int), S(b:int) and an int parameter k, checked on
//! every database with tables of size at most 3 over 0..=2 and k in {0, 2}.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use qil_core::emit::{eval_sql, to_sql, MiniDb};
use qil_core::tor::*;
use qil_core::types::{Field, ScalarType, Schema, Value};
use qil_core::verify::space::relations;
use qil_core::verify::Bounds;
use qil_core::Bindings;

#[derive(Debug, Default)]
pub struct EmissionReport {
    pub generated: usize,
    pub translatable: usize,
    pub databases: usize,
    pub comparisons: u64,
    pub violations: u64,
    pub first_violation: Option<String>,
}

fn int_schema(name: &str) -> Arc<Schema> {
    Arc::new(Schema::new(vec![Field::new(name, ScalarType::Int)]))
}

fn ctx() -> SortCtx {
    SortCtx {
        relations: BTreeMap::from([("R".to_string(), int_schema("a")), ("S".to_string(), int_schema("b"))]),
        scalars: BTreeMap::from([("k".to_string(), ScalarType::Int)]),
    }
}

fn preds() -> Vec<Pred> {
    let ra = || Operand::Field(ColRef::new("R", "a"));
    let sb = || Operand::Field(ColRef::new("S", "b"));
    vec![
        Pred::True,
        Pred::atom(CmpOp::Gt, ra(), Operand::Int(1)),
        Pred::atom(CmpOp::Eq, ra(), sb()),
        Pred::Or(vec![
            Pred::atom(CmpOp::Le, sb(), Operand::Var("k".into())),
            Pred::Not(Box::new(Pred::atom(CmpOp::Ne, ra(), Operand::Int(0)))),
        ]),
    ]
}

fn projections() -> Vec<Vec<ColRef>> {
    let (a, b) = (ColRef::new("R", "a"), ColRef::new("S", "b"));
    vec![vec![a.clone()], vec![b, a.clone()], vec![a.clone(), a]]
}

fn limits() -> Vec<ScalarExpr> {
    vec![ScalarExpr::Int(-1), ScalarExpr::Int(2), ScalarExpr::Var("k".into())]
}

/// Relation-valued expressions up to `max_depth`, keeping only those that
/// sort-check and translate. Wrapping an untranslatable expression never
/// makes it translatable, so the rest are not extended.
fn relation_exprs(max_depth: usize, generated: &mut usize) -> Vec<TorExpr> {
    let ctx = ctx();
    let mut keep = |e: TorExpr, seen: &mut BTreeSet<TorExpr>| {
        *generated += 1;
        if ctx.sort(&e).is_ok() && to_sql(&e).is_ok() {
            seen.insert(e);
        }
    };
    let mut by_depth: Vec<Vec<TorExpr>> = vec![vec![], vec![TorExpr::query("R"), TorExpr::query("S")]];
    for d in 2..=max_depth {
        let mut level = BTreeSet::new();
        let below: Vec<TorExpr> = by_depth.iter().flatten().cloned().collect();
        for e in &by_depth[d - 1] {
            for p in preds() {
                keep(e.clone().sel(p), &mut level);
            }
            for f in projections() {
                keep(e.clone().proj(f), &mut level);
            }
            for k in limits() {
                keep(e.clone().top(k), &mut level);
            }
            for other in &below {
                for p in preds() {
                    keep(e.clone().join(other.clone(), p.clone()), &mut level);
                    if other.depth() < d - 1 {
                        keep(other.clone().join(e.clone(), p), &mut level);
                    }
                }
            }
        }
        // Operators outside the SELECT image are generated and rejected.
        for e in &by_depth[d - 1] {
            keep(e.clone().concat(e.clone()), &mut level);
            keep(e.clone().size(), &mut level);
        }
        by_depth.push(level.into_iter().collect());
    }
    by_depth.into_iter().flatten().collect()
}

/// All translatable expressions up to `max_depth`: relation expressions
/// plus aggregates over those one level shallower.
pub fn translatable_exprs(max_depth: usize) -> (usize, Vec<TorExpr>) {
    let mut generated = 0;
    let rels = relation_exprs(max_depth, &mut generated);
    let mut out = rels.clone();
    let ctx = ctx();
    for e in rels.iter().filter(|e| e.depth() < max_depth) {
        for (kind, col) in [
            (AggKind::Count, None),
            (AggKind::Sum, Some(ColRef::new("R", "a"))),
            (AggKind::Min, Some(ColRef::new("S", "b"))),
            (AggKind::Max, Some(ColRef::new("R", "a"))),
        ] {
            let agg = TorExpr::agg(kind, col, e.clone());
            generated += 1;
            if ctx.sort(&agg).is_ok() && to_sql(&agg).is_ok() {
                out.push(agg);
            }
        }
    }
    (generated, out)
}

pub fn databases() -> Vec<Bindings> {
    let b = Bounds { max_relation_size: 3, int_domain: 2, ..Bounds::default() };
    let (rs, ss) = (relations(&int_schema("a"), &b), relations(&int_schema("b"), &b));
    let mut out = Vec::new();
    for r in &rs {
        for s in &ss {
            for k in [0, 2] {
                out.push(Bindings::from([
                    ("R".to_string(), Value::Rel(r.clone())),
                    ("S".to_string(), Value::Rel(s.clone())),
                    ("k".to_string(), Value::Int(k)),
                ]));
            }
        }
    }
    out
}

pub fn check_emission(max_depth: usize) -> EmissionReport {
    let (generated, exprs) = translatable_exprs(max_depth);
    let dbs = databases();
    let envs: Vec<(TorEnv, MiniDb)> = dbs
        .iter()
        .map(|b| {
            let mut env = TorEnv::new();
            for (name, v) in b {
                match v {
                    Value::Rel(r) => env.bind_relation(name, r),
                    Value::Int(x) => env.bind_int(name, *x),
                    _ => unreachable!(),
                }
            }
            (env, MiniDb::from_bindings(b))
        })
        .collect();
    let mut rep = EmissionReport { generated, translatable: exprs.len(), databases: dbs.len(), ..Default::default() };
    for e in &exprs {
        let q = to_sql(e).expect("filtered to translatable");
        for (n, (env, db)) in envs.iter().enumerate() {
            rep.comparisons += 1;
            let ok = match (env.eval(e), eval_sql(&q, db)) {
                (Ok(a), Ok(b)) => a.equivalent(&b),
                _ => false,
            };
            if !ok {
                rep.violations += 1;
                if rep.first_violation.is_none() {
                    rep.first_violation = Some(format!("{e} / {q} on {:?}", dbs[n]));
                }
            }
        }
    }
    rep
}
