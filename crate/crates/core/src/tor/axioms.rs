//! Executable axioms of the theory, checked exhaustively over small
//! relations by evaluation.
//!
//! | axiom | law |
//! |---|---|
//! | A1 | `Top(e, k) = e` whenever `k >= Size(e)` |
//! | A2 | `Size(Concat(l, r)) = Size(l) + Size(r)` |
//! | A3 | aggregates of `Concat(l, r)` combine the aggregates of `l` and `r` |
//! | A4 | `Sel(p2, Sel(p1, e)) = Sel(p1 and p2, e)` |
//! | A5 | `Proj(F, Sel(p, e)) = Sel(p, Proj(F, e))` when `p` only mentions `F` |
//! | A6 | `Append(e, rec) = Concat(e, [rec])` |
//! | A7 | row `i * Size(r) + j` of `Join(l, r, true)` is `l[i] ++ r[j]` |

use std::fmt;
use std::sync::Arc;

use super::{eval_rel, eval_scalar, AggKind, CmpOp, ColRef, Operand, Pred, ScalarExpr, TorEnv, TorExpr};
use crate::types::{Field, OrderedRelation, Scalar, ScalarType, Schema, Value};
use crate::verify::space::relations;
use crate::verify::Bounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axiom {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
}

impl Axiom {
    pub const ALL: [Axiom; 7] = [Axiom::A1, Axiom::A2, Axiom::A3, Axiom::A4, Axiom::A5, Axiom::A6, Axiom::A7];
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Domains the axioms are checked over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomDomain {
    pub max_size: usize,
    /// Size limit for the join law, which is cheap enough to go further.
    pub join_max_size: usize,
    pub int_domain: i64,
    pub text_domain: Vec<String>,
}

impl Default for AxiomDomain {
    fn default() -> Self {
        AxiomDomain { max_size: 3, join_max_size: 4, int_domain: 2, text_domain: vec!["a".into(), "b".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub instances: u64,
    pub violations: u64,
    pub first_violation: Option<String>,
}

struct Tally {
    report: AxiomReport,
}

impl Tally {
    fn new(axiom: Axiom) -> Self {
        Tally { report: AxiomReport { axiom, instances: 0, violations: 0, first_violation: None } }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.report.instances += 1;
        if !ok {
            self.report.violations += 1;
            if self.report.first_violation.is_none() {
                self.report.first_violation = Some(what());
            }
        }
    }
}

fn schema(fields: &[(&str, ScalarType)]) -> Arc<Schema> {
    Arc::new(Schema::new(fields.iter().map(|(n, t)| Field::new(*n, *t)).collect()))
}

fn col(q: &str, n: &str) -> ColRef {
    ColRef::new(q, n)
}

fn field(q: &str, n: &str) -> Operand {
    Operand::Field(col(q, n))
}

/// Predicates over `R(a:int, b:text)`.
fn preds() -> Vec<Pred> {
    vec![
        Pred::True,
        Pred::atom(CmpOp::Gt, field("R", "a"), Operand::Int(0)),
        Pred::atom(CmpOp::Le, field("R", "a"), Operand::Int(1)),
        Pred::atom(CmpOp::Eq, field("R", "b"), Operand::Text("a".into())),
        Pred::Not(Box::new(Pred::atom(CmpOp::Ne, field("R", "a"), Operand::Int(2)))),
        Pred::Or(vec![
            Pred::atom(CmpOp::Eq, field("R", "a"), Operand::Int(0)),
            Pred::atom(CmpOp::Eq, field("R", "b"), Operand::Text("b".into())),
        ]),
    ]
}

fn ints(v: &Value) -> Option<Option<i64>> {
    match v {
        Value::Int(x) => Some(Some(*x)),
        Value::OptInt(x) => Some(*x),
        _ => None,
    }
}

fn check(axiom: Axiom, d: &AxiomDomain) -> AxiomReport {
    let bounds = |n: usize| Bounds { max_relation_size: n, int_domain: d.int_domain, text_domain: d.text_domain.clone() };
    let rs = schema(&[("a", ScalarType::Int), ("b", ScalarType::Text)]);
    let small = relations(&rs, &bounds(d.max_size));
    let qr = TorExpr::query("R");
    let qs = TorExpr::query("S");
    let mut t = Tally::new(axiom);
    let env1 = |r: &OrderedRelation| {
        let mut env = TorEnv::new();
        env.bind_relation("R", r);
        env
    };
    let env2 = |r: &OrderedRelation, s: &OrderedRelation| {
        let mut env = env1(r);
        env.bind_relation("S", s);
        env
    };
    let same = |env: &TorEnv, x: &TorExpr, y: &TorExpr| match (eval_rel(x, env), eval_rel(y, env)) {
        (Ok(a), Ok(b)) => a.rows == b.rows,
        _ => false,
    };
    match axiom {
        Axiom::A1 => {
            let es = [qr.clone(), qr.clone().sel(preds()[1].clone())];
            for r in &small {
                let env = env1(r);
                for e in &es {
                    let size = eval_rel(e, &env).map(|x| x.len() as i64).unwrap_or(-1);
                    let mut ks: Vec<ScalarExpr> =
                        (size..=d.max_size as i64 + 1).map(ScalarExpr::Int).collect();
                    ks.push(ScalarExpr::Size(Box::new(e.clone())));
                    for k in ks {
                        let top = e.clone().top(k.clone());
                        t.record(same(&env, &top, e), || format!("{top} on {:?}", r.rows));
                    }
                }
            }
        }
        Axiom::A2 | Axiom::A3 => {
            for r in &small {
                for s in &small {
                    let env = env2(r, s);
                    let cat = qr.clone().concat(qs.clone());
                    if axiom == Axiom::A2 {
                        let whole = eval_scalar(&cat.clone().size(), &env);
                        let parts = (eval_scalar(&qr.clone().size(), &env), eval_scalar(&qs.clone().size(), &env));
                        let ok = matches!((whole, parts), (Ok(Value::Int(w)), (Ok(Value::Int(x)), Ok(Value::Int(y)))) if w == x + y);
                        t.record(ok, || format!("sizes of {:?} ++ {:?}", r.rows, s.rows));
                        continue;
                    }
                    for kind in AggKind::ALL {
                        let f = |q: &str| (kind != AggKind::Count).then(|| col(q, "a"));
                        let agg = |q: &str, e: TorExpr| eval_scalar(&TorExpr::agg(kind, f(q), e), &env);
                        let (whole, left, right) = (agg("R", cat.clone()), agg("R", qr.clone()), agg("S", qs.clone()));
                        let ok = match (whole.as_ref().map(ints), left.as_ref().map(ints), right.as_ref().map(ints)) {
                            (Ok(Some(w)), Ok(Some(x)), Ok(Some(y))) => {
                                let combined = match kind {
                                    AggKind::Sum | AggKind::Count => Some(x.unwrap_or(0) + y.unwrap_or(0)),
                                    AggKind::Min => x.into_iter().chain(y).min(),
                                    AggKind::Max => x.into_iter().chain(y).max(),
                                };
                                w == combined
                            }
                            _ => false,
                        };
                        t.record(ok, || format!("{} of {:?} ++ {:?}", kind.name(), r.rows, s.rows));
                    }
                }
            }
        }
        Axiom::A4 => {
            let ps = preds();
            for r in &small {
                let env = env1(r);
                for p1 in &ps {
                    for p2 in &ps {
                        let lhs = qr.clone().sel(p1.clone()).sel(p2.clone());
                        let rhs = qr.clone().sel(Pred::and(vec![p1.clone(), p2.clone()]));
                        t.record(same(&env, &lhs, &rhs), || format!("{lhs} on {:?}", r.rows));
                    }
                }
            }
        }
        Axiom::A5 => {
            let projections =
                [vec![col("R", "a")], vec![col("R", "b")], vec![col("R", "a"), col("R", "b")], vec![col("R", "b"), col("R", "a")]];
            for r in &small {
                let env = env1(r);
                for f in &projections {
                    for p in preds() {
                        let mut mentioned = Vec::new();
                        p.fields(&mut mentioned);
                        if !mentioned.iter().all(|c| f.contains(c)) {
                            continue;
                        }
                        let lhs = qr.clone().sel(p.clone()).proj(f.clone());
                        let rhs = qr.clone().proj(f.clone()).sel(p.clone());
                        t.record(same(&env, &lhs, &rhs), || format!("{lhs} on {:?}", r.rows));
                    }
                }
            }
        }
        Axiom::A6 => {
            let one = crate::verify::space::rows(&rs, &bounds(1));
            for r in &small {
                for row in &one {
                    let single = OrderedRelation::new(rs.clone(), vec![row.clone()]);
                    let env = env2(r, &single);
                    let lhs = qr.clone().append(qs.clone().get(ScalarExpr::Int(0)));
                    let rhs = qr.clone().concat(qs.clone());
                    t.record(same(&env, &lhs, &rhs), || format!("append {row:?} to {:?}", r.rows));
                }
            }
        }
        Axiom::A7 => {
            let ss = schema(&[("c", ScalarType::Int)]);
            let left = relations(&rs, &bounds(d.join_max_size));
            let right = relations(&ss, &bounds(d.join_max_size));
            let join = qr.clone().join(qs.clone(), Pred::True);
            for l in &left {
                for r in &right {
                    let out = eval_rel(&join, &env2(l, r));
                    let ok = out.is_ok_and(|o| {
                        o.len() == l.len() * r.len()
                            && (0..l.len()).all(|i| {
                                (0..r.len()).all(|j| {
                                    let expect: Vec<Scalar> = l.rows[i].iter().chain(&r.rows[j]).cloned().collect();
                                    o.rows[i * r.len() + j] == expect
                                })
                            })
                    });
                    t.record(ok, || format!("join of {:?} and {:?}", l.rows, r.rows));
                }
            }
        }
    }
    t.report
}

/// Checks one axiom exhaustively over `d`.
pub fn check_axiom(axiom: Axiom, d: &AxiomDomain) -> AxiomReport {
    check(axiom, d)
}

pub fn check_all(d: &AxiomDomain) -> Vec<AxiomReport> {
    Axiom::ALL.iter().map(|&a| check(a, d)).collect()
}
