//! Candidate loop invariants and postconditions, their cost measure and
//! their canonical text.
//!
//! ```text
//! (candidate
//!   (loop L0 (bound i R) (def out (sel (> (field R.a) 2) (top (query R) i))))
//!   (post out (sel (> (field R.a) 2) (query R))))
//! ```

use std::collections::HashSet;
use std::fmt;

use crate::tor::text::{expr_from_sexp, read_sexp, Sexp};
use crate::tor::{expr_text, pred_text, scalar_text, Pred, ScalarExpr, TorError, TorExpr};

/// Invariant of one loop. The index bounds `0 <= index <= size(relation)`
/// are implicit; `defs` binds each live variable to a TOR expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LoopInvariant {
    pub loop_id: usize,
    pub index: String,
    pub relation: String,
    pub defs: Vec<(String, TorExpr)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Candidate {
    /// One invariant per loop, in loop-id order.
    pub invariants: Vec<LoopInvariant>,
    pub result: String,
    pub post: TorExpr,
}

impl Candidate {
    pub fn invariant(&self, loop_id: usize) -> Option<&LoopInvariant> {
        self.invariants.iter().find(|l| l.loop_id == loop_id)
    }

    /// Number of distinct sub-terms across all invariant definitions and
    /// the postcondition. Relation, count and predicate nodes each count
    /// one; a comparison atom is a single node.
    pub fn cost(&self) -> usize {
        let mut seen = HashSet::new();
        for inv in &self.invariants {
            for (_, e) in &inv.defs {
                dag_expr(e, &mut seen);
            }
        }
        dag_expr(&self.post, &mut seen);
        seen.len()
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(src: &str) -> Result<Candidate, TorError> {
        let bad = |m: &str| TorError::Syntax(format!("candidate: {m}"));
        let doc = read_sexp(src)?;
        let (head, items) = doc.form().ok_or_else(|| bad("expected `(candidate ...)`"))?;
        if head != "candidate" {
            return Err(bad("expected `(candidate ...)`"));
        }
        let mut invariants = Vec::new();
        let mut post = None;
        for item in items {
            match item.form() {
                Some(("loop", [id, bound, defs @ ..])) => {
                    let loop_id = id
                        .atom()
                        .and_then(|a| a.strip_prefix('L'))
                        .and_then(|n| n.parse().ok())
                        .ok_or_else(|| bad("loop ids are written `L<n>`"))?;
                    let (index, relation) = match bound.form() {
                        Some(("bound", [Sexp::Atom(i), Sexp::Atom(r)])) => (i.clone(), r.clone()),
                        _ => return Err(bad("expected `(bound <index> <relation>)`")),
                    };
                    let mut ds = Vec::new();
                    for d in defs {
                        match d.form() {
                            Some(("def", [Sexp::Atom(v), e])) => ds.push((v.clone(), expr_from_sexp(e)?)),
                            _ => return Err(bad("expected `(def <var> <expr>)`")),
                        }
                    }
                    invariants.push(LoopInvariant { loop_id, index, relation, defs: ds });
                }
                Some(("post", [Sexp::Atom(v), e])) if post.is_none() => post = Some((v.clone(), expr_from_sexp(e)?)),
                _ => return Err(bad("expected `(loop ...)` or a single `(post <var> <expr>)`")),
            }
        }
        let (result, post) = post.ok_or_else(|| bad("missing `(post ...)`"))?;
        invariants.sort_by_key(|l| l.loop_id);
        Ok(Candidate { invariants, result, post })
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(candidate")?;
        for inv in &self.invariants {
            write!(f, " (loop L{} (bound {} {})", inv.loop_id, inv.index, inv.relation)?;
            for (v, e) in &inv.defs {
                write!(f, " (def {v} {e})")?;
            }
            f.write_str(")")?;
        }
        write!(f, " (post {} {}))", self.result, self.post)
    }
}

fn dag_expr(e: &TorExpr, seen: &mut HashSet<String>) {
    if !seen.insert(format!("r{}", expr_text(e))) {
        return;
    }
    match e {
        TorExpr::Query(_) | TorExpr::Empty(_) => {}
        TorExpr::Sel(x, p) => {
            dag_expr(x, seen);
            dag_pred(p, seen);
        }
        TorExpr::Proj(x, _) | TorExpr::Agg(_, _, x) | TorExpr::Size(x) => dag_expr(x, seen),
        TorExpr::Join(l, r, p) => {
            dag_expr(l, seen);
            dag_expr(r, seen);
            dag_pred(p, seen);
        }
        TorExpr::Top(x, k) | TorExpr::Get(x, k) => {
            dag_expr(x, seen);
            dag_scalar(k, seen);
        }
        TorExpr::Append(a, b) | TorExpr::Concat(a, b) => {
            dag_expr(a, seen);
            dag_expr(b, seen);
        }
    }
}

fn dag_scalar(k: &ScalarExpr, seen: &mut HashSet<String>) {
    if !seen.insert(format!("k{}", scalar_text(k))) {
        return;
    }
    match k {
        ScalarExpr::Size(e) => dag_expr(e, seen),
        ScalarExpr::Add(a, b) | ScalarExpr::Sub(a, b) => {
            dag_scalar(a, seen);
            dag_scalar(b, seen);
        }
        _ => {}
    }
}

fn dag_pred(p: &Pred, seen: &mut HashSet<String>) {
    if !seen.insert(format!("p{}", pred_text(p))) {
        return;
    }
    match p {
        Pred::And(ps) | Pred::Or(ps) => ps.iter().for_each(|q| dag_pred(q, seen)),
        Pred::Not(q) => dag_pred(q, seen),
        _ => {}
    }
}
