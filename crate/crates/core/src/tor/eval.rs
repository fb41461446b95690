//! Evaluator for TOR expressions over concrete ordered relations.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::sync::Arc;

use super::expr::*;
use super::TorError;
use crate::types::{OrderedRelation, Row, Scalar, Schema, Value};

/// Bindings for evaluation: relation parameters, scalar parameters and
/// loop indices.
#[derive(Debug, Clone, Default)]
pub struct TorEnv {
    relations: BTreeMap<String, OrderedRelation>,
    scalars: BTreeMap<String, Scalar>,
}

impl TorEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Binds a relation parameter. Field names are qualified with the
    /// parameter name so that columns resolve as `R.a`.
    pub fn bind_relation(&mut self, name: &str, rel: &OrderedRelation) {
        let qualified = TorSchema::of_relation(name, &rel.schema).to_schema();
        self.relations
            .insert(name.to_string(), OrderedRelation { schema: Arc::new(qualified), rows: rel.rows.clone() });
    }

    pub fn bind_scalar(&mut self, name: &str, v: Scalar) {
        match self.scalars.get_mut(name) {
            Some(slot) => *slot = v,
            None => {
                self.scalars.insert(name.to_string(), v);
            }
        }
    }

    pub fn bind_int(&mut self, name: &str, v: i64) {
        self.bind_scalar(name, Scalar::Int(v));
    }

    pub fn relation(&self, name: &str) -> Option<&OrderedRelation> {
        self.relations.get(name)
    }

    pub fn scalar(&self, name: &str) -> Option<&Scalar> {
        self.scalars.get(name)
    }

    pub fn eval(&self, e: &TorExpr) -> Result<Value, TorError> {
        match e {
            TorExpr::Agg(..) | TorExpr::Size(_) | TorExpr::Get(..) => self.scalar_value(e),
            _ => self.rel(e).map(Value::Rel),
        }
    }

    fn rel(&self, e: &TorExpr) -> Result<OrderedRelation, TorError> {
        self.rel_cow(e).map(Cow::into_owned)
    }

    /// Relation-valued evaluation that borrows bound relations instead of
    /// copying them.
    fn rel_cow(&self, e: &TorExpr) -> Result<Cow<'_, OrderedRelation>, TorError> {
        match e {
            TorExpr::Query(r) => self.relations.get(r).map(Cow::Borrowed).ok_or_else(|| TorError::UnboundName(r.clone())),
            TorExpr::Empty(s) => Ok(Cow::Owned(OrderedRelation::empty(Arc::new(s.to_schema())))),
            TorExpr::Sel(inner, p) => {
                let r = self.rel_cow(inner)?;
                let cp = self.compile(p, &r.schema)?;
                Ok(Cow::Owned(match r {
                    Cow::Borrowed(b) => OrderedRelation {
                        schema: b.schema.clone(),
                        rows: b.rows.iter().filter(|row| cp.holds(row)).cloned().collect(),
                    },
                    Cow::Owned(mut o) => {
                        o.rows.retain(|row| cp.holds(row));
                        o
                    }
                }))
            }
            TorExpr::Proj(inner, cols) => {
                let r = self.rel_cow(inner)?;
                let pos = cols
                    .iter()
                    .map(|c| position(&r.schema, c))
                    .collect::<Result<Vec<_>, _>>()?;
                let schema = Schema::new(pos.iter().map(|&p| r.schema.fields[p].clone()).collect());
                let rows = r.rows.iter().map(|row| pos.iter().map(|&p| row[p].clone()).collect()).collect();
                Ok(Cow::Owned(OrderedRelation { schema: Arc::new(schema), rows }))
            }
            TorExpr::Join(l, rt, p) => {
                let (a, b) = (self.rel_cow(l)?, self.rel_cow(rt)?);
                let mut fields = a.schema.fields.clone();
                fields.extend(b.schema.fields.iter().cloned());
                let schema = Arc::new(Schema::new(fields));
                let cp = self.compile(p, &schema)?;
                let mut rows = Vec::new();
                let mut row: Row = Vec::with_capacity(schema.len());
                // Left-major: the left index varies slowest.
                for x in &a.rows {
                    for y in &b.rows {
                        row.clear();
                        row.extend(x.iter().cloned());
                        row.extend(y.iter().cloned());
                        if cp.holds(&row) {
                            rows.push(row.clone());
                        }
                    }
                }
                Ok(Cow::Owned(OrderedRelation { schema, rows }))
            }
            TorExpr::Top(inner, k) => {
                let k = self.int(k)?.max(0) as usize;
                Ok(match self.rel_cow(inner)? {
                    Cow::Borrowed(b) if k >= b.len() => Cow::Borrowed(b),
                    Cow::Borrowed(b) => {
                        Cow::Owned(OrderedRelation { schema: b.schema.clone(), rows: b.rows[..k].to_vec() })
                    }
                    Cow::Owned(mut o) => {
                        o.rows.truncate(k);
                        Cow::Owned(o)
                    }
                })
            }
            TorExpr::Append(inner, rec) => {
                let mut r = self.rel_cow(inner)?.into_owned();
                match self.scalar_value(rec)? {
                    Value::Record(s, row) if s.same_shape(&r.schema) => {
                        r.rows.push(row);
                        Ok(Cow::Owned(r))
                    }
                    other => Err(TorError::Schema(format!("cannot append {other}"))),
                }
            }
            TorExpr::Concat(l, rt) => {
                let mut a = self.rel_cow(l)?.into_owned();
                let b = self.rel_cow(rt)?;
                if !a.schema.same_shape(&b.schema) {
                    return Err(TorError::Schema("concatenated relations differ in shape".into()));
                }
                a.rows.extend(b.rows.iter().cloned());
                Ok(Cow::Owned(a))
            }
            TorExpr::Agg(..) | TorExpr::Size(_) | TorExpr::Get(..) => {
                Err(TorError::Schema("expected a relation-valued expression".into()))
            }
        }
    }

    fn scalar_value(&self, e: &TorExpr) -> Result<Value, TorError> {
        match e {
            TorExpr::Size(inner) => Ok(Value::Int(self.rel_cow(inner)?.len() as i64)),
            TorExpr::Get(inner, k) => {
                let r = self.rel_cow(inner)?;
                let idx = self.int(k)?;
                if idx < 0 || idx as usize >= r.len() {
                    return Err(TorError::Index { index: idx, size: r.len() });
                }
                Ok(Value::Record(r.schema.clone(), r.rows[idx as usize].clone()))
            }
            TorExpr::Agg(kind, col, inner) => {
                let r = self.rel_cow(inner)?;
                if *kind == AggKind::Count {
                    return Ok(Value::Int(r.len() as i64));
                }
                let c = col.as_ref().ok_or_else(|| TorError::Schema("aggregate needs a column".into()))?;
                let p = position(&r.schema, c)?;
                let vals = r.rows.iter().map(|row| {
                    row[p].as_int().ok_or_else(|| TorError::Schema(format!("aggregate over text column {c}")))
                });
                let vals: Vec<i64> = vals.collect::<Result<_, _>>()?;
                Ok(match kind {
                    AggKind::Sum => Value::Int(vals.iter().sum()),
                    AggKind::Min => Value::OptInt(vals.iter().copied().min()),
                    AggKind::Max => Value::OptInt(vals.iter().copied().max()),
                    AggKind::Count => unreachable!(),
                })
            }
            _ => Err(TorError::Schema("expected a scalar-valued expression".into())),
        }
    }

    pub fn int(&self, k: &ScalarExpr) -> Result<i64, TorError> {
        match k {
            ScalarExpr::Int(v) => Ok(*v),
            ScalarExpr::Var(v) => match self.scalars.get(v) {
                Some(Scalar::Int(x)) => Ok(*x),
                Some(Scalar::Text(_)) => Err(TorError::Schema(format!("`{v}` is not an integer"))),
                None => Err(TorError::UnboundName(v.clone())),
            },
            ScalarExpr::Size(e) => Ok(self.rel_cow(e)?.len() as i64),
            ScalarExpr::Add(a, b) => Ok(self.int(a)? + self.int(b)?),
            ScalarExpr::Sub(a, b) => Ok(self.int(a)? - self.int(b)?),
        }
    }

    fn compile(&self, p: &Pred, schema: &Schema) -> Result<CompiledPred, TorError> {
        let operand = |o: &Operand| -> Result<Slot, TorError> {
            Ok(match o {
                Operand::Field(c) => Slot::Col(position(schema, c)?),
                Operand::Int(v) => Slot::Const(Scalar::Int(*v)),
                Operand::Text(t) => Slot::Const(Scalar::text(t)),
                Operand::Var(v) => {
                    Slot::Const(self.scalars.get(v).cloned().ok_or_else(|| TorError::UnboundName(v.clone()))?)
                }
            })
        };
        Ok(match p {
            Pred::True => CompiledPred::True,
            Pred::Atom(op, a, b) => CompiledPred::Atom(*op, operand(a)?, operand(b)?),
            Pred::And(ps) => CompiledPred::And(ps.iter().map(|q| self.compile(q, schema)).collect::<Result<_, _>>()?),
            Pred::Or(ps) => CompiledPred::Or(ps.iter().map(|q| self.compile(q, schema)).collect::<Result<_, _>>()?),
            Pred::Not(q) => CompiledPred::Not(Box::new(self.compile(q, schema)?)),
        })
    }
}

fn position(schema: &Schema, c: &ColRef) -> Result<usize, TorError> {
    schema
        .fields
        .iter()
        .position(|f| c.matches(&f.name))
        .ok_or_else(|| TorError::Schema(format!("column {c} not in operand")))
}

enum Slot {
    Col(usize),
    Const(Scalar),
}

impl Slot {
    fn get<'a>(&'a self, row: &'a [Scalar]) -> &'a Scalar {
        match self {
            Slot::Col(p) => &row[*p],
            Slot::Const(s) => s,
        }
    }
}

/// Predicate with column references resolved to row positions.
enum CompiledPred {
    True,
    Atom(CmpOp, Slot, Slot),
    And(Vec<CompiledPred>),
    Or(Vec<CompiledPred>),
    Not(Box<CompiledPred>),
}

impl CompiledPred {
    fn holds(&self, row: &[Scalar]) -> bool {
        match self {
            CompiledPred::True => true,
            CompiledPred::Atom(op, a, b) => op.holds(a.get(row), b.get(row)),
            CompiledPred::And(ps) => ps.iter().all(|p| p.holds(row)),
            CompiledPred::Or(ps) => ps.iter().any(|p| p.holds(row)),
            CompiledPred::Not(p) => !p.holds(row),
        }
    }
}

/// Evaluates a relation-valued expression.
pub fn eval_rel(e: &TorExpr, env: &TorEnv) -> Result<OrderedRelation, TorError> {
    env.rel(e)
}

/// Evaluates a scalar-valued (`Agg`, `Size`) or record-valued (`Get`)
/// expression.
pub fn eval_scalar(e: &TorExpr, env: &TorEnv) -> Result<Value, TorError> {
    env.scalar_value(e)
}
