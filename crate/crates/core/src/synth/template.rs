//! Synthesis templates: the vocabulary a program makes available to
//! candidate invariants, gathered by a syntactic scan.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::frontend::ast::{BinOp, Builtin};
use crate::frontend::{LoopId, TExpr, TExprKind, TStmt, Ty, TypedProgram};
use crate::tor::{AggKind, CmpOp};
use crate::types::{ScalarType, Schema};
use crate::verify::modified_vars;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopNode {
    pub id: LoopId,
    pub index: String,
    pub relation: String,
    pub parent: Option<LoopId>,
    pub has_break: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Template {
    pub relations: Vec<(String, Arc<Schema>)>,
    pub scalar_params: Vec<(String, ScalarType)>,
    pub int_constants: BTreeSet<i64>,
    pub text_constants: BTreeSet<String>,
    pub cmps: BTreeSet<CmpOp>,
    pub agg_kinds: BTreeSet<AggKind>,
    pub has_append: bool,
    pub has_break: bool,
    pub has_or: bool,
    pub has_not: bool,
    pub loops: Vec<LoopNode>,
    /// Variables assigned inside some loop, in declaration order.
    pub live: Vec<LiveVar>,
    pub result: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiveVar {
    pub name: String,
    pub ty: Ty,
    /// Loops whose body (directly or through nesting) assigns the variable.
    pub loops: Vec<LoopId>,
}

impl Template {
    pub fn schema(&self, rel: &str) -> Option<&Arc<Schema>> {
        self.relations.iter().find(|(n, _)| n == rel).map(|(_, s)| s)
    }

    /// Depth of the loop nest.
    pub fn nesting(&self) -> usize {
        let depth = |mut id: LoopId| {
            let mut d = 1;
            while let Some(p) = self.loops[id].parent {
                d += 1;
                id = p;
            }
            d
        };
        self.loops.iter().map(|l| depth(l.id)).max().unwrap_or(0)
    }
}

/// Scans the program. Every constant, operator and accumulator kind in the
/// template occurs syntactically in the program.
pub fn extract_template(prog: &TypedProgram) -> Template {
    let mut t = Template::default();
    for p in prog.params() {
        match &p.ty {
            Ty::Rel(s) => t.relations.push((p.name.clone(), s.clone())),
            Ty::Int => t.scalar_params.push((p.name.clone(), ScalarType::Int)),
            Ty::Text => t.scalar_params.push((p.name.clone(), ScalarType::Text)),
            _ => {}
        }
    }
    for l in &prog.loops {
        t.loops.push(LoopNode {
            id: l.id,
            index: l.index_name.clone(),
            relation: l.relation_name.clone(),
            parent: l.parent,
            has_break: l.has_break,
        });
    }
    let mut live: Vec<LiveVar> = Vec::new();
    for l in &prog.loops {
        for v in modified_vars(prog.loop_body(l.id)) {
            let info = &prog.vars[v];
            match live.iter_mut().find(|x| x.name == info.name) {
                Some(x) => x.loops.push(l.id),
                None => live.push(LiveVar { name: info.name.clone(), ty: info.ty.clone(), loops: vec![l.id] }),
            }
        }
    }
    live.sort_by_key(|x| prog.var_named(&x.name));
    t.live = live;
    t.result = prog.vars[prog.result].name.clone();
    for (_, init) in &prog.inits {
        scan_expr(init, &mut t);
    }
    scan_block(&prog.body, &mut t);
    t
}

fn scan_block(stmts: &[TStmt], t: &mut Template) {
    for s in stmts {
        match s {
            TStmt::Assign { target, value } => {
                if let Some(kind) = accumulator(*target, value) {
                    t.agg_kinds.insert(kind);
                }
                scan_expr(value, t);
            }
            TStmt::Append { value, .. } => {
                t.has_append = true;
                scan_expr(value, t);
            }
            TStmt::If { cond, then_branch, else_branch } => {
                scan_expr(cond, t);
                scan_block(then_branch, t);
                scan_block(else_branch, t);
            }
            TStmt::For { body, .. } => scan_block(body, t),
            TStmt::Break => t.has_break = true,
        }
    }
}

/// Recognises `v = v + <literal>` (count), `v = v + e` (sum) and
/// `v = min/max(v, e)`.
fn accumulator(target: usize, value: &TExpr) -> Option<AggKind> {
    let is_target = |e: &TExpr| matches!(e.kind, TExprKind::Var(v) if v == target);
    match &value.kind {
        TExprKind::Binary(BinOp::Add, a, b) => {
            let other = if is_target(a) {
                b
            } else if is_target(b) {
                a
            } else {
                return None;
            };
            Some(if matches!(other.kind, TExprKind::Int(_)) { AggKind::Count } else { AggKind::Sum })
        }
        TExprKind::Call(f, a, b) if is_target(a) || is_target(b) => {
            Some(if *f == Builtin::Min { AggKind::Min } else { AggKind::Max })
        }
        _ => None,
    }
}

fn cmp_of(op: BinOp) -> Option<CmpOp> {
    Some(match op {
        BinOp::Eq => CmpOp::Eq,
        BinOp::Ne => CmpOp::Ne,
        BinOp::Lt => CmpOp::Lt,
        BinOp::Le => CmpOp::Le,
        BinOp::Gt => CmpOp::Gt,
        BinOp::Ge => CmpOp::Ge,
        _ => return None,
    })
}

fn scan_expr(e: &TExpr, t: &mut Template) {
    match &e.kind {
        TExprKind::Int(v) => {
            t.int_constants.insert(*v);
        }
        TExprKind::Text(s) => {
            t.text_constants.insert(s.to_string());
        }
        TExprKind::None | TExprKind::Var(_) | TExprKind::Row { .. } | TExprKind::Field { .. } => {}
        TExprKind::Neg(x) => scan_expr(x, t),
        TExprKind::Not(x) => {
            t.has_not = true;
            scan_expr(x, t);
        }
        TExprKind::Binary(op, a, b) => {
            if let Some(c) = cmp_of(*op) {
                t.cmps.insert(c);
            }
            if *op == BinOp::Or {
                t.has_or = true;
            }
            scan_expr(a, t);
            scan_expr(b, t);
        }
        TExprKind::Call(_, a, b) => {
            scan_expr(a, t);
            scan_expr(b, t);
        }
        TExprKind::Record(items) => items.iter().for_each(|i| scan_expr(i, t)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load;

    #[test]
    fn selection_vocabulary() {
        let p = load("fn f(R: rel(a:int)) { var out: list(a:int); for i in 0..size(R) { if R[i].a > 2 { out.append(R[i]); } } return out; }").unwrap();
        let t = extract_template(&p);
        assert_eq!(t.int_constants, BTreeSet::from([2]));
        assert_eq!(t.cmps, BTreeSet::from([CmpOp::Gt]));
        assert!(t.agg_kinds.is_empty());
        assert!(t.has_append && !t.has_break);
        assert_eq!(t.nesting(), 1);
    }

    #[test]
    fn accumulator_kinds() {
        let p = load(
            "fn f(R: rel(a:int)) { var s: int = 0; var c: int = 0; var m: int?; \
             for i in 0..size(R) { s = s + R[i].a; c = c + 1; m = min(m, R[i].a); } return s; }",
        )
        .unwrap();
        let t = extract_template(&p);
        assert_eq!(t.agg_kinds, BTreeSet::from([AggKind::Sum, AggKind::Count, AggKind::Min]));
        assert!(!t.has_append);
        assert_eq!(t.int_constants, BTreeSet::from([0, 1]));
    }
}
