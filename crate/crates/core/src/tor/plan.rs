//! Compiled TOR expressions.
//!
//! A [`Plan`] is a sort-checked expression whose column references are
//! resolved to row positions and whose relation and scalar names are
//! resolved to slots of a flat value store. Evaluation does no name lookup
//! and builds no schemas, and it borrows unmodified input relations. It
//! agrees with [`TorEnv`](super::TorEnv) evaluation on every well-sorted
//! expression.

use std::borrow::Cow;

use super::expr::*;
use super::TorError;
use crate::types::{Row, Scalar, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Plan {
    Query(usize),
    Empty,
    Sel(Box<Plan>, CPred),
    Proj(Box<Plan>, Vec<usize>),
    Join(Box<Plan>, Box<Plan>, CPred),
    Top(Box<Plan>, CScalar),
    Append(Box<Plan>, Box<Plan>),
    Concat(Box<Plan>, Box<Plan>),
    /// Aggregate over the column at the given position (unused for count).
    Agg(AggKind, usize, Box<Plan>),
    Get(Box<Plan>, CScalar),
    Size(Box<Plan>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CScalar {
    Int(i64),
    Slot(usize),
    Size(Box<Plan>),
    Add(Box<CScalar>, Box<CScalar>),
    Sub(Box<CScalar>, Box<CScalar>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum COperand {
    Col(usize),
    Const(Scalar),
    Slot(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CPred {
    True,
    Atom(CmpOp, COperand, COperand),
    And(Vec<CPred>),
    Or(Vec<CPred>),
    Not(Box<CPred>),
}

/// Result of evaluating a plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanValue<'a> {
    Rows(Cow<'a, [Row]>),
    Int(i64),
    OptInt(Option<i64>),
    Row(Row),
}

impl PlanValue<'_> {
    /// Whether a program value holds the same data. Relation values compare
    /// by rows only; their schemas are fixed by typing.
    pub fn matches(&self, v: &Value) -> bool {
        match (self, v) {
            (PlanValue::Rows(rows), Value::Rel(r)) => r.rows.as_slice() == rows.as_ref(),
            (PlanValue::Int(a), Value::Int(b)) => a == b,
            (PlanValue::Int(a), Value::OptInt(b)) => Some(*a) == *b,
            (PlanValue::OptInt(a), Value::OptInt(b)) => a == b,
            (PlanValue::OptInt(Some(a)), Value::Int(b)) => a == b,
            (PlanValue::Row(a), Value::Record(_, b)) => a == b,
            _ => false,
        }
    }
}

impl Plan {
    /// Compiles `e`, resolving relation and scalar names with `slot`.
    pub fn compile(e: &TorExpr, ctx: &SortCtx, slot: &dyn Fn(&str) -> Option<usize>) -> Result<Plan, TorError> {
        ctx.sort(e)?;
        Compiler { ctx, slot }.expr(e)
    }

    pub fn eval<'a>(&self, store: &'a [Value]) -> Result<PlanValue<'a>, TorError> {
        Ok(match self {
            Plan::Agg(kind, col, inner) => {
                let rows = self::rows(inner, store)?;
                let vals = rows.iter().map(|r| match r[*col] {
                    Scalar::Int(v) => v,
                    Scalar::Text(_) => 0,
                });
                match kind {
                    AggKind::Count => PlanValue::Int(rows.len() as i64),
                    AggKind::Sum => PlanValue::Int(vals.sum()),
                    AggKind::Min => PlanValue::OptInt(vals.min()),
                    AggKind::Max => PlanValue::OptInt(vals.max()),
                }
            }
            Plan::Size(inner) => PlanValue::Int(rows(inner, store)?.len() as i64),
            Plan::Get(inner, k) => {
                let rows = rows(inner, store)?;
                let idx = scalar(k, store)?;
                if idx < 0 || idx as usize >= rows.len() {
                    return Err(TorError::Index { index: idx, size: rows.len() });
                }
                PlanValue::Row(rows[idx as usize].clone())
            }
            _ => PlanValue::Rows(rows(self, store)?),
        })
    }
}

fn rel_slot(store: &[Value], s: usize) -> &[Row] {
    match &store[s] {
        Value::Rel(r) => &r.rows,
        other => panic!("slot {s} holds {other}, not a relation"),
    }
}

fn scalar_slot(store: &[Value], s: usize) -> Scalar {
    store[s].to_scalar().unwrap_or_else(|| panic!("slot {s} holds {}, not a scalar", store[s]))
}

fn scalar(k: &CScalar, store: &[Value]) -> Result<i64, TorError> {
    Ok(match k {
        CScalar::Int(v) => *v,
        CScalar::Slot(s) => scalar_slot(store, *s).as_int().expect("sort-checked integer slot"),
        CScalar::Size(p) => rows(p, store)?.len() as i64,
        CScalar::Add(a, b) => scalar(a, store)? + scalar(b, store)?,
        CScalar::Sub(a, b) => scalar(a, store)? - scalar(b, store)?,
    })
}

fn rows<'a>(p: &Plan, store: &'a [Value]) -> Result<Cow<'a, [Row]>, TorError> {
    Ok(match p {
        Plan::Query(s) => Cow::Borrowed(rel_slot(store, *s)),
        Plan::Empty => Cow::Owned(Vec::new()),
        Plan::Sel(inner, pred) => {
            let pred = bind(pred, store);
            match rows(inner, store)? {
                Cow::Borrowed(b) => Cow::Owned(b.iter().filter(|r| pred.holds(r)).cloned().collect()),
                Cow::Owned(mut o) => {
                    o.retain(|r| pred.holds(r));
                    Cow::Owned(o)
                }
            }
        }
        Plan::Proj(inner, pos) => {
            Cow::Owned(rows(inner, store)?.iter().map(|r| pos.iter().map(|&p| r[p].clone()).collect()).collect())
        }
        Plan::Join(l, r, pred) => {
            let pred = bind(pred, store);
            let (a, b) = (rows(l, store)?, rows(r, store)?);
            let mut out = Vec::new();
            let mut row: Row = Vec::new();
            for x in a.iter() {
                for y in b.iter() {
                    row.clear();
                    row.extend(x.iter().cloned());
                    row.extend(y.iter().cloned());
                    if pred.holds(&row) {
                        out.push(row.clone());
                    }
                }
            }
            Cow::Owned(out)
        }
        Plan::Top(inner, k) => {
            let k = scalar(k, store)?.max(0) as usize;
            match rows(inner, store)? {
                Cow::Borrowed(b) => Cow::Borrowed(&b[..k.min(b.len())]),
                Cow::Owned(mut o) => {
                    o.truncate(k);
                    Cow::Owned(o)
                }
            }
        }
        Plan::Append(inner, rec) => {
            let mut out = rows(inner, store)?.into_owned();
            match rec.eval(store)? {
                PlanValue::Row(r) => out.push(r),
                other => unreachable!("sort-checked append of {other:?}"),
            }
            Cow::Owned(out)
        }
        Plan::Concat(l, r) => {
            let mut out = rows(l, store)?.into_owned();
            out.extend(rows(r, store)?.iter().cloned());
            Cow::Owned(out)
        }
        Plan::Agg(..) | Plan::Get(..) | Plan::Size(_) => unreachable!("sort-checked relation position"),
    })
}

/// Predicate with scalar slots replaced by their current values.
enum Bound<'p> {
    True,
    Atom(CmpOp, BOperand<'p>, BOperand<'p>),
    And(Vec<Bound<'p>>),
    Or(Vec<Bound<'p>>),
    Not(Box<Bound<'p>>),
}

enum BOperand<'p> {
    Col(usize),
    Const(Cow<'p, Scalar>),
}

fn bind<'p>(p: &'p CPred, store: &[Value]) -> Bound<'p> {
    let op = |o: &'p COperand| match o {
        COperand::Col(c) => BOperand::Col(*c),
        COperand::Const(s) => BOperand::Const(Cow::Borrowed(s)),
        COperand::Slot(s) => BOperand::Const(Cow::Owned(scalar_slot(store, *s))),
    };
    match p {
        CPred::True => Bound::True,
        CPred::Atom(o, a, b) => Bound::Atom(*o, op(a), op(b)),
        CPred::And(ps) => Bound::And(ps.iter().map(|q| bind(q, store)).collect()),
        CPred::Or(ps) => Bound::Or(ps.iter().map(|q| bind(q, store)).collect()),
        CPred::Not(q) => Bound::Not(Box::new(bind(q, store))),
    }
}

impl BOperand<'_> {
    fn get<'r>(&'r self, row: &'r [Scalar]) -> &'r Scalar {
        match self {
            BOperand::Col(c) => &row[*c],
            BOperand::Const(s) => s.as_ref(),
        }
    }
}

impl Bound<'_> {
    fn holds(&self, row: &[Scalar]) -> bool {
        match self {
            Bound::True => true,
            Bound::Atom(op, a, b) => op.holds(a.get(row), b.get(row)),
            Bound::And(ps) => ps.iter().all(|p| p.holds(row)),
            Bound::Or(ps) => ps.iter().any(|p| p.holds(row)),
            Bound::Not(p) => !p.holds(row),
        }
    }
}

struct Compiler<'c> {
    ctx: &'c SortCtx,
    slot: &'c dyn Fn(&str) -> Option<usize>,
}

impl Compiler<'_> {
    fn name(&self, n: &str) -> Result<usize, TorError> {
        (self.slot)(n).ok_or_else(|| TorError::UnboundName(n.to_string()))
    }

    fn col(s: &TorSchema, c: &ColRef) -> Result<usize, TorError> {
        s.position(c).ok_or_else(|| TorError::Schema(format!("column {c} not in operand")))
    }

    fn expr(&self, e: &TorExpr) -> Result<Plan, TorError> {
        let b = |x: &TorExpr| self.expr(x).map(Box::new);
        Ok(match e {
            TorExpr::Query(r) => Plan::Query(self.name(r)?),
            TorExpr::Empty(_) => Plan::Empty,
            TorExpr::Sel(x, p) => Plan::Sel(b(x)?, self.pred(p, &self.ctx.rel(x)?)?),
            TorExpr::Proj(x, cols) => {
                let s = self.ctx.rel(x)?;
                Plan::Proj(b(x)?, cols.iter().map(|c| Self::col(&s, c)).collect::<Result<_, _>>()?)
            }
            TorExpr::Join(l, r, p) => {
                let mut s = self.ctx.rel(l)?;
                s.cols.extend(self.ctx.rel(r)?.cols);
                Plan::Join(b(l)?, b(r)?, self.pred(p, &s)?)
            }
            TorExpr::Top(x, k) => Plan::Top(b(x)?, self.scalar(k)?),
            TorExpr::Get(x, k) => Plan::Get(b(x)?, self.scalar(k)?),
            TorExpr::Append(x, r) => Plan::Append(b(x)?, b(r)?),
            TorExpr::Concat(l, r) => Plan::Concat(b(l)?, b(r)?),
            TorExpr::Agg(kind, c, x) => {
                let pos = match c {
                    Some(c) => Self::col(&self.ctx.rel(x)?, c)?,
                    None => 0,
                };
                Plan::Agg(*kind, pos, b(x)?)
            }
            TorExpr::Size(x) => Plan::Size(b(x)?),
        })
    }

    fn scalar(&self, k: &ScalarExpr) -> Result<CScalar, TorError> {
        let b = |x: &ScalarExpr| self.scalar(x).map(Box::new);
        Ok(match k {
            ScalarExpr::Int(v) => CScalar::Int(*v),
            ScalarExpr::Var(v) => CScalar::Slot(self.name(v)?),
            ScalarExpr::Size(e) => CScalar::Size(Box::new(self.expr(e)?)),
            ScalarExpr::Add(x, y) => CScalar::Add(b(x)?, b(y)?),
            ScalarExpr::Sub(x, y) => CScalar::Sub(b(x)?, b(y)?),
        })
    }

    fn pred(&self, p: &Pred, s: &TorSchema) -> Result<CPred, TorError> {
        let op = |o: &Operand| -> Result<COperand, TorError> {
            Ok(match o {
                Operand::Field(c) => COperand::Col(Self::col(s, c)?),
                Operand::Int(v) => COperand::Const(Scalar::Int(*v)),
                Operand::Text(t) => COperand::Const(Scalar::text(t)),
                Operand::Var(v) => COperand::Slot(self.name(v)?),
            })
        };
        Ok(match p {
            Pred::True => CPred::True,
            Pred::Atom(o, a, b) => CPred::Atom(*o, op(a)?, op(b)?),
            Pred::And(ps) => CPred::And(ps.iter().map(|q| self.pred(q, s)).collect::<Result<_, _>>()?),
            Pred::Or(ps) => CPred::Or(ps.iter().map(|q| self.pred(q, s)).collect::<Result<_, _>>()?),
            Pred::Not(q) => CPred::Not(Box::new(self.pred(q, s)?)),
        })
    }
}
