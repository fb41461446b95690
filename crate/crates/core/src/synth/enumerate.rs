//! Candidate enumeration.
//!
//! Every live variable gets a *core* expression in the translatable
//! grammar:
//!
//! ```text
//! core  := [Top k] [Proj F] base | Agg(kind, f, base)
//! base  := [Sel P] Query(R)                  one loop
//!        | Join(Query(R), Query(S), P)       two nested loops
//! ```
//!
//! The postcondition binds the result variable to its core. The outer loop
//! invariant replaces `Query(R)` by `Top(Query(R), i)`. The inner loop
//! invariant splits the join at the current outer row:
//! `Concat(X[R := Top(Query(R), i)], X[R := Append(Empty, Get(Query(R), i)),
//! S := Top(Query(S), j)])`, with any `Top`/`Agg` wrappers kept outside.

#[cfg(test)]
use std::collections::BTreeSet;

use super::template::{LoopNode, Template};
use super::{Candidate, LoopInvariant};
use crate::frontend::Ty;
use crate::tor::{pred_text, AggKind, CmpOp, ColRef, Column, Operand, Pred, ScalarExpr, TorExpr, TorSchema};
use crate::types::ScalarType;

/// Largest number of literals in an enumerated conjunction.
pub const MAX_CONJUNCTS: usize = 3;

struct Nest<'t> {
    outer: &'t LoopNode,
    inner: Option<&'t LoopNode>,
}

fn nest(tpl: &Template) -> Option<Nest<'_>> {
    let outer = match tpl.loops.as_slice() {
        [o] | [o, _] if o.parent.is_none() => o,
        _ => return None,
    };
    let inner = tpl.loops.get(1);
    if let Some(l) = inner {
        if l.parent != Some(outer.id) || l.relation == outer.relation {
            return None;
        }
    }
    for l in std::iter::once(outer).chain(inner) {
        tpl.schema(&l.relation)?;
    }
    Some(Nest { outer, inner })
}

/// All well-shaped candidates of cost at most `cost_bound`, ordered by
/// cost and then canonical text.
pub fn enumerate(tpl: &Template, cost_bound: usize) -> Vec<Candidate> {
    let Some(nest) = nest(tpl) else { return Vec::new() };
    if !tpl.live.iter().any(|v| v.name == tpl.result) {
        return Vec::new();
    }
    let vocab = Vocab::new(tpl);
    let bases = bases(tpl, &nest, &vocab, cost_bound);
    let mut per_var: Vec<Vec<TorExpr>> = Vec::new();
    for v in &tpl.live {
        let cores = cores(&v.ty, &bases, tpl, &vocab);
        if cores.is_empty() {
            return Vec::new();
        }
        per_var.push(cores);
    }
    let mut out: Vec<(usize, String, Candidate)> = Vec::new();
    let mut pick = vec![0usize; per_var.len()];
    loop {
        let chosen: Vec<&TorExpr> = pick.iter().zip(&per_var).map(|(&k, cs)| &cs[k]).collect();
        let cand = derive(tpl, &nest, &chosen);
        let cost = cand.cost();
        if cost <= cost_bound {
            out.push((cost, cand.to_text(), cand));
        }
        // Odometer over the per-variable core lists.
        let mut pos = pick.len();
        loop {
            if pos == 0 {
                out.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
                out.dedup_by(|a, b| a.1 == b.1);
                return out.into_iter().map(|(_, _, c)| c).collect();
            }
            pos -= 1;
            pick[pos] += 1;
            if pick[pos] < per_var[pos].len() {
                break;
            }
            pick[pos] = 0;
        }
    }
}

/// Constants, operators and parameters a predicate may mention.
struct Vocab {
    cmps: Vec<CmpOp>,
    ints: Vec<i64>,
    texts: Vec<String>,
    params: Vec<(String, ScalarType)>,
    int_params: Vec<String>,
}

impl Vocab {
    fn new(tpl: &Template) -> Self {
        Vocab {
            cmps: tpl.cmps.iter().copied().collect(),
            ints: tpl.int_constants.iter().copied().collect(),
            texts: tpl.text_constants.iter().cloned().collect(),
            params: tpl.scalar_params.clone(),
            int_params: tpl
                .scalar_params
                .iter()
                .filter(|(_, t)| *t == ScalarType::Int)
                .map(|(n, _)| n.clone())
                .collect(),
        }
    }

    /// Candidate `Top` bounds: integer literals and integer parameters.
    fn top_bounds(&self) -> Vec<ScalarExpr> {
        let mut ks: Vec<ScalarExpr> = self.ints.iter().map(|&k| ScalarExpr::Int(k)).collect();
        ks.extend(self.int_params.iter().map(ScalarExpr::var));
        ks
    }
}

/// Type-correct comparison atoms over `cols`.
fn atoms(cols: &[Column], v: &Vocab) -> Vec<Pred> {
    let field = |c: &Column| Operand::Field(c.col.clone());
    let mut out = Vec::new();
    for (x, a) in cols.iter().enumerate() {
        for (y, b) in cols.iter().enumerate() {
            if x == y || a.ty != b.ty {
                continue;
            }
            for &op in &v.cmps {
                if op.applies_to(a.ty) && (x < y || !op.is_symmetric()) {
                    out.push(Pred::atom(op, field(a), field(b)));
                }
            }
        }
        for &op in v.cmps.iter().filter(|op| op.applies_to(a.ty)) {
            let consts: Vec<Operand> = match a.ty {
                ScalarType::Int => v.ints.iter().map(|&k| Operand::Int(k)).collect(),
                ScalarType::Text => v.texts.iter().map(|s| Operand::Text(s.clone())).collect(),
            };
            for k in consts {
                out.push(Pred::atom(op, field(a), k));
            }
            for (p, _) in v.params.iter().filter(|(_, t)| *t == a.ty) {
                out.push(Pred::atom(op, field(a), Operand::Var(p.clone())));
            }
        }
    }
    out
}

fn literals(cols: &[Column], tpl: &Template, v: &Vocab) -> Vec<Pred> {
    let atoms = atoms(cols, v);
    let mut out = atoms.clone();
    if tpl.has_not {
        out.extend(atoms.iter().map(|a| Pred::Not(Box::new(a.clone()))));
    }
    if tpl.has_or {
        for (x, a) in atoms.iter().enumerate() {
            for b in &atoms[x + 1..] {
                out.push(Pred::Or(vec![a.clone(), b.clone()]));
            }
        }
    }
    // Conjuncts appear in canonical-text order.
    out.sort_by_cached_key(pred_text);
    out.dedup();
    out
}

/// `true` followed by every conjunction of up to [`MAX_CONJUNCTS`] distinct
/// literals whose node count fits `budget`.
fn predicates(lits: &[Pred], budget: usize) -> Vec<Pred> {
    fn go(lits: &[Pred], from: usize, cur: &mut Vec<Pred>, size: usize, budget: usize, out: &mut Vec<Pred>) {
        for k in from..lits.len() {
            let add = lits[k].node_count() + usize::from(cur.len() == 1);
            if size + add > budget {
                continue;
            }
            cur.push(lits[k].clone());
            out.push(Pred::and(cur.clone()));
            if cur.len() < MAX_CONJUNCTS {
                go(lits, k + 1, cur, size + add, budget, out);
            }
            cur.pop();
        }
    }
    let mut out = vec![Pred::True];
    go(lits, 0, &mut Vec::new(), 0, budget, &mut out);
    out
}

struct Base {
    expr: TorExpr,
    schema: TorSchema,
}

fn bases(tpl: &Template, nest: &Nest, v: &Vocab, cost_bound: usize) -> Vec<Base> {
    let rel_schema = |l: &LoopNode| TorSchema::of_relation(&l.relation, tpl.schema(&l.relation).unwrap());
    let r = TorExpr::query(&nest.outer.relation);
    let sr = rel_schema(nest.outer);
    match nest.inner {
        None => {
            let lits = literals(&sr.cols, tpl, v);
            predicates(&lits, cost_bound)
                .into_iter()
                .map(|p| Base { expr: if p == Pred::True { r.clone() } else { r.clone().sel(p) }, schema: sr.clone() })
                .collect()
        }
        Some(inner) => {
            let mut schema = sr;
            schema.cols.extend(rel_schema(inner).cols);
            let lits = literals(&schema.cols, tpl, v);
            predicates(&lits, cost_bound)
                .into_iter()
                .map(|p| Base { expr: r.clone().join(TorExpr::query(&inner.relation), p), schema: schema.clone() })
                .collect()
        }
    }
}

/// Ordered column lists of `schema` whose types match `target` position by
/// position, excluding the identity.
fn projections(schema: &TorSchema, target: &[ScalarType]) -> Vec<Vec<ColRef>> {
    fn go(schema: &TorSchema, target: &[ScalarType], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == target.len() {
            out.push(cur.clone());
            return;
        }
        for (k, c) in schema.cols.iter().enumerate() {
            if c.ty == target[cur.len()] && !cur.contains(&k) {
                cur.push(k);
                go(schema, target, cur, out);
                cur.pop();
            }
        }
    }
    let mut idx = Vec::new();
    go(schema, target, &mut Vec::new(), &mut idx);
    let identity: Vec<usize> = (0..schema.cols.len()).collect();
    idx.into_iter()
        .filter(|p| *p != identity)
        .map(|p| p.into_iter().map(|k| schema.cols[k].col.clone()).collect())
        .collect()
}

fn cores(ty: &Ty, bases: &[Base], tpl: &Template, v: &Vocab) -> Vec<TorExpr> {
    let tops = if tpl.has_break { v.top_bounds() } else { Vec::new() };
    let with_tops = |e: TorExpr, out: &mut Vec<TorExpr>| {
        for k in &tops {
            out.push(e.clone().top(k.clone()));
        }
        out.push(e);
    };
    let mut out = Vec::new();
    match ty {
        Ty::List(target) => {
            let types: Vec<ScalarType> = target.types().collect();
            for b in bases {
                let shapes_match =
                    b.schema.cols.len() == types.len() && b.schema.cols.iter().zip(&types).all(|(c, t)| c.ty == *t);
                if shapes_match {
                    with_tops(b.expr.clone(), &mut out);
                }
                for f in projections(&b.schema, &types) {
                    with_tops(b.expr.clone().proj(f), &mut out);
                }
            }
        }
        Ty::Int | Ty::OptInt => {
            let kinds: &[AggKind] =
                if *ty == Ty::Int { &[AggKind::Sum, AggKind::Count] } else { &[AggKind::Min, AggKind::Max] };
            for &kind in kinds.iter().filter(|k| tpl.agg_kinds.contains(k)) {
                for b in bases {
                    let fields: Vec<Option<ColRef>> = if kind == AggKind::Count {
                        vec![None]
                    } else {
                        b.schema.cols.iter().filter(|c| c.ty == ScalarType::Int).map(|c| Some(c.col.clone())).collect()
                    };
                    for f in fields {
                        out.push(TorExpr::agg(kind, f, b.expr.clone()));
                    }
                }
            }
        }
        _ => {}
    }
    out
}

/// Simultaneous substitution of `Query(name)` leaves.
fn subst(e: &TorExpr, map: &[(&str, &TorExpr)]) -> TorExpr {
    let s = |x: &TorExpr| Box::new(subst(x, map));
    let k = |x: &ScalarExpr| subst_scalar(x, map);
    match e {
        TorExpr::Query(r) => match map.iter().find(|(n, _)| n == r) {
            Some((_, to)) => (*to).clone(),
            None => e.clone(),
        },
        TorExpr::Empty(_) => e.clone(),
        TorExpr::Sel(x, p) => TorExpr::Sel(s(x), p.clone()),
        TorExpr::Proj(x, f) => TorExpr::Proj(s(x), f.clone()),
        TorExpr::Join(a, b, p) => TorExpr::Join(s(a), s(b), p.clone()),
        TorExpr::Top(x, n) => TorExpr::Top(s(x), k(n)),
        TorExpr::Append(a, b) => TorExpr::Append(s(a), s(b)),
        TorExpr::Concat(a, b) => TorExpr::Concat(s(a), s(b)),
        TorExpr::Agg(kind, f, x) => TorExpr::Agg(*kind, f.clone(), s(x)),
        TorExpr::Get(x, n) => TorExpr::Get(s(x), k(n)),
        TorExpr::Size(x) => TorExpr::Size(s(x)),
    }
}

fn subst_scalar(e: &ScalarExpr, map: &[(&str, &TorExpr)]) -> ScalarExpr {
    match e {
        ScalarExpr::Size(x) => ScalarExpr::Size(Box::new(subst(x, map))),
        ScalarExpr::Add(a, b) => ScalarExpr::Add(Box::new(subst_scalar(a, map)), Box::new(subst_scalar(b, map))),
        ScalarExpr::Sub(a, b) => ScalarExpr::Sub(Box::new(subst_scalar(a, map)), Box::new(subst_scalar(b, map))),
        _ => e.clone(),
    }
}

/// Splits `Top`/`Agg` wrappers off the root.
fn peel(e: &TorExpr) -> (Vec<&TorExpr>, &TorExpr) {
    let mut wrappers = Vec::new();
    let mut cur = e;
    loop {
        match cur {
            TorExpr::Top(x, _) | TorExpr::Agg(_, _, x) => {
                wrappers.push(cur);
                cur = x;
            }
            _ => return (wrappers, cur),
        }
    }
}

fn rewrap(wrappers: &[&TorExpr], core: TorExpr) -> TorExpr {
    wrappers.iter().rev().fold(core, |acc, w| match w {
        TorExpr::Top(_, k) => acc.top(k.clone()),
        TorExpr::Agg(kind, f, _) => TorExpr::agg(*kind, f.clone(), acc),
        _ => unreachable!("peel only returns Top and Agg"),
    })
}

fn derive(tpl: &Template, nest: &Nest, cores: &[&TorExpr]) -> Candidate {
    let o = nest.outer;
    let qr = TorExpr::query(&o.relation);
    let prefix_r = qr.clone().top(ScalarExpr::var(&o.index));
    let mut invariants = Vec::new();
    let defs_for = |id: usize, f: &dyn Fn(&TorExpr) -> TorExpr| -> Vec<(String, TorExpr)> {
        tpl.live
            .iter()
            .zip(cores)
            .filter(|(v, _)| v.loops.contains(&id))
            .map(|(v, c)| (v.name.clone(), f(c)))
            .collect()
    };
    invariants.push(LoopInvariant {
        loop_id: o.id,
        index: o.index.clone(),
        relation: o.relation.clone(),
        defs: defs_for(o.id, &|c| subst(c, &[(&o.relation, &prefix_r)])),
    });
    if let Some(inner) = nest.inner {
        let schema_r = TorSchema::of_relation(&o.relation, tpl.schema(&o.relation).unwrap());
        let current_r = TorExpr::Empty(schema_r).append(qr.clone().get(ScalarExpr::var(&o.index)));
        let prefix_s = TorExpr::query(&inner.relation).top(ScalarExpr::var(&inner.index));
        let split = |c: &TorExpr| {
            let (wrappers, x) = peel(c);
            let done = subst(x, &[(&o.relation, &prefix_r)]);
            let partial = subst(x, &[(&o.relation, &current_r), (&inner.relation, &prefix_s)]);
            rewrap(&wrappers, done.concat(partial))
        };
        invariants.push(LoopInvariant {
            loop_id: inner.id,
            index: inner.index.clone(),
            relation: inner.relation.clone(),
            defs: defs_for(inner.id, &split),
        });
    }
    let post = tpl.live.iter().zip(cores).find(|(v, _)| v.name == tpl.result).map(|(_, c)| (*c).clone()).unwrap();
    Candidate { invariants, result: tpl.result.clone(), post }
}

#[cfg(test)]
/// Vocabulary a candidate mentions, for pruning checks.
pub(crate) fn mentioned_constants(c: &Candidate) -> (BTreeSet<i64>, BTreeSet<String>) {
    fn pred(p: &Pred, ints: &mut BTreeSet<i64>, texts: &mut BTreeSet<String>) {
        match p {
            Pred::True => {}
            Pred::Atom(_, a, b) => {
                for o in [a, b] {
                    match o {
                        Operand::Int(k) => {
                            ints.insert(*k);
                        }
                        Operand::Text(s) => {
                            texts.insert(s.clone());
                        }
                        _ => {}
                    }
                }
            }
            Pred::And(ps) | Pred::Or(ps) => ps.iter().for_each(|q| pred(q, ints, texts)),
            Pred::Not(q) => pred(q, ints, texts),
        }
    }
    let mut ints = BTreeSet::new();
    let mut texts = BTreeSet::new();
    let exprs = c.invariants.iter().flat_map(|l| l.defs.iter().map(|(_, e)| e)).chain(std::iter::once(&c.post));
    for e in exprs {
        e.visit(&mut |x| match x {
            TorExpr::Sel(_, p) | TorExpr::Join(_, _, p) => pred(p, &mut ints, &mut texts),
            TorExpr::Top(_, ScalarExpr::Int(k)) => {
                ints.insert(*k);
            }
            _ => {}
        });
    }
    (ints, texts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load;
    use crate::synth::extract_template;

    #[test]
    fn candidates_only_mention_template_constants() {
        let p = load(
            "fn f(R: rel(a:int, t:text)) { var out: list(a:int, t:text); \
             for i in 0..size(R) { if R[i].a > 2 && R[i].t == \"x\" { out.append(R[i]); } } return out; }",
        )
        .unwrap();
        let tpl = extract_template(&p);
        let cands = enumerate(&tpl, 24);
        assert!(!cands.is_empty());
        for c in &cands {
            let (ints, texts) = mentioned_constants(c);
            assert!(ints.is_subset(&tpl.int_constants), "{ints:?}");
            assert!(texts.is_subset(&tpl.text_constants), "{texts:?}");
        }
    }
}
