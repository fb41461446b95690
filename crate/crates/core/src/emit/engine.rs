//! A minimal in-memory engine for the emitted SQL fragment: cross product
//! of at most two sources, WHERE, SELECT, ORDER BY rid, LIMIT and the four
//! aggregates. It shares no evaluation code with the TOR evaluator so the
//! two can serve as oracles for each other.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use super::{Limit, SelectItem, SqlQuery, RID};
use crate::interp::Bindings;
use crate::tor::{AggKind, CmpOp, ColRef, Operand, Pred};
use crate::types::{Field, OrderedRelation, Scalar, Schema, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("unbound parameter `:{0}`")]
    UnknownParam(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("syntax error: {0}")]
    Syntax(String),
}

/// Tables (row position is the rid) and scalar parameters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MiniDb {
    pub tables: BTreeMap<String, OrderedRelation>,
    pub params: BTreeMap<String, Scalar>,
}

impl MiniDb {
    /// Loads relation bindings as tables and scalar bindings as parameters.
    pub fn from_bindings(b: &Bindings) -> Self {
        let mut db = MiniDb::default();
        for (name, v) in b {
            match v {
                Value::Rel(r) => {
                    db.tables.insert(name.clone(), r.clone());
                }
                other => {
                    if let Some(s) = other.to_scalar() {
                        db.params.insert(name.clone(), s);
                    }
                }
            }
        }
        db
    }
}

/// Column address inside a product row: source index and field position.
/// `None` position is the rid.
type Slot = (usize, Option<usize>);

struct Ctx<'a> {
    q: &'a SqlQuery,
    db: &'a MiniDb,
    sources: Vec<&'a OrderedRelation>,
}

impl<'a> Ctx<'a> {
    fn slot(&self, c: &ColRef) -> Result<Slot, SqlError> {
        let unknown = || SqlError::UnknownColumn(c.to_string());
        let src = self.q.from.iter().position(|t| *t == c.qual).ok_or_else(unknown)?;
        if c.name == RID {
            return Ok((src, None));
        }
        let pos = self.sources[src].schema.position(&c.name).ok_or_else(unknown)?;
        Ok((src, Some(pos)))
    }

    fn fetch(&self, (src, pos): Slot, rids: &[usize]) -> Scalar {
        match pos {
            Some(p) => self.sources[src].rows[rids[src]][p].clone(),
            None => Scalar::Int(rids[src] as i64),
        }
    }

    fn operand(&self, o: &Operand, rids: &[usize]) -> Result<Scalar, SqlError> {
        Ok(match o {
            Operand::Field(c) => self.fetch(self.slot(c)?, rids),
            Operand::Int(k) => Scalar::Int(*k),
            Operand::Text(s) => Scalar::text(s),
            Operand::Var(v) => self.db.params.get(v).cloned().ok_or_else(|| SqlError::UnknownParam(v.clone()))?,
        })
    }

    fn test(&self, p: &Pred, rids: &[usize]) -> Result<bool, SqlError> {
        Ok(match p {
            Pred::True => true,
            Pred::Atom(op, a, b) => {
                let (x, y) = (self.operand(a, rids)?, self.operand(b, rids)?);
                if x.ty() != y.ty() {
                    return Err(SqlError::Type(format!("cannot compare {x} with {y}")));
                }
                match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                }
            }
            Pred::And(ps) => {
                for q in ps {
                    if !self.test(q, rids)? {
                        return Ok(false);
                    }
                }
                true
            }
            Pred::Or(ps) => {
                for q in ps {
                    if self.test(q, rids)? {
                        return Ok(true);
                    }
                }
                false
            }
            Pred::Not(q) => !self.test(q, rids)?,
        })
    }
}

/// Runs a query. Relation-valued queries return `Value::Rel`; `COUNT` and
/// `COALESCE(SUM)` return `Value::Int`; `MIN`/`MAX` return `Value::OptInt`
/// with SQL NULL as `None`.
pub fn eval_sql(q: &SqlQuery, db: &MiniDb) -> Result<Value, SqlError> {
    let mut sources = Vec::new();
    for t in &q.from {
        sources.push(db.tables.get(t).ok_or_else(|| SqlError::UnknownTable(t.clone()))?);
    }
    let cx = Ctx { q, db, sources };

    // Cross product, first source varying slowest.
    let mut product: Vec<Vec<usize>> = vec![Vec::new()];
    for s in &cx.sources {
        product = product.into_iter().flat_map(|p| (0..s.len()).map(move |r| [p.clone(), vec![r]].concat())).collect();
    }
    let mut kept = Vec::new();
    for rids in product {
        if match &q.filter {
            Some(p) => cx.test(p, &rids)?,
            None => true,
        } {
            kept.push(rids);
        }
    }

    if let [SelectItem::Agg(kind, col)] = q.select.as_slice() {
        let values: Vec<i64> = match col {
            Some(c) => {
                let slot = cx.slot(c)?;
                kept.iter()
                    .map(|r| cx.fetch(slot, r).as_int().ok_or_else(|| SqlError::Type(format!("{c} is not an integer"))))
                    .collect::<Result<_, _>>()?
            }
            None => Vec::new(),
        };
        return Ok(match kind {
            AggKind::Count => Value::Int(kept.len() as i64),
            AggKind::Sum => Value::Int(values.iter().sum()),
            AggKind::Min => Value::OptInt(values.iter().copied().min()),
            AggKind::Max => Value::OptInt(values.iter().copied().max()),
        });
    }

    let mut keys = Vec::new();
    for t in &q.order_by {
        keys.push(cx.slot(&ColRef::new(t.clone(), RID))?);
    }
    kept.sort_by_key(|rids| keys.iter().map(|&k| cx.fetch(k, rids)).collect::<Vec<_>>());
    if let Some(l) = &q.limit {
        let n = match l {
            Limit::Int(k) => *k,
            Limit::Param(v) => match db.params.get(v) {
                Some(Scalar::Int(k)) => *k,
                Some(_) => return Err(SqlError::Type(format!("LIMIT :{v} is not an integer"))),
                None => return Err(SqlError::UnknownParam(v.clone())),
            },
        };
        kept.truncate(n.max(0) as usize);
    }

    let mut slots = Vec::new();
    let mut fields = Vec::new();
    for item in &q.select {
        match item {
            SelectItem::Star(t) => {
                let src = q.from.iter().position(|x| x == t).ok_or_else(|| SqlError::UnknownTable(t.clone()))?;
                for (p, f) in cx.sources[src].schema.fields.iter().enumerate() {
                    slots.push((src, Some(p)));
                    fields.push(Field::new(format!("{t}.{}", f.name), f.ty));
                }
            }
            SelectItem::Column(c) => {
                let slot = cx.slot(c)?;
                let ty = match slot {
                    (src, Some(p)) => cx.sources[src].schema.fields[p].ty,
                    (_, None) => crate::types::ScalarType::Int,
                };
                slots.push(slot);
                fields.push(Field::new(c.to_string(), ty));
            }
            SelectItem::Agg(..) => return Err(SqlError::Syntax("aggregate mixed with columns".into())),
        }
    }
    let rows = kept.iter().map(|r| slots.iter().map(|&s| cx.fetch(s, r)).collect()).collect();
    Ok(Value::Rel(OrderedRelation::new(Arc::new(Schema::new(fields)), rows)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::parse_sql;
    use crate::types::ScalarType;

    fn table(name: &str, vals: &[i64]) -> (String, OrderedRelation) {
        let schema = Arc::new(Schema::new(vec![Field::new(name.to_lowercase(), ScalarType::Int)]));
        (name.into(), OrderedRelation::new(schema, vals.iter().map(|&v| vec![Scalar::Int(v)]).collect()))
    }

    fn db() -> MiniDb {
        MiniDb { tables: [table("R", &[3, 1, 2]), table("S", &[5, 6])].into_iter().collect(), params: BTreeMap::new() }
    }

    fn ints(v: Value) -> Vec<Vec<i64>> {
        v.as_rel().unwrap().rows.iter().map(|r| r.iter().map(|s| s.as_int().unwrap()).collect()).collect()
    }

    #[test]
    fn identity_keeps_order() {
        let q = parse_sql("SELECT R.* FROM R ORDER BY R.rid").unwrap();
        assert_eq!(ints(eval_sql(&q, &db()).unwrap()), vec![vec![3], vec![1], vec![2]]);
    }

    #[test]
    fn cross_join_is_left_major() {
        let q = parse_sql("SELECT R.*, S.* FROM R, S ORDER BY R.rid, S.rid").unwrap();
        let rows = ints(eval_sql(&q, &db()).unwrap());
        let expected: Vec<Vec<i64>> = [3, 1, 2].iter().flat_map(|&r| [5, 6].map(|s| vec![r, s])).collect();
        assert_eq!(rows, expected);
    }

    #[test]
    fn empty_aggregates() {
        let mut d = db();
        d.tables.insert("R".into(), table("R", &[]).1);
        let run = |s: &str| eval_sql(&parse_sql(s).unwrap(), &d).unwrap();
        assert_eq!(run("SELECT COALESCE(SUM(R.r), 0) FROM R"), Value::Int(0));
        assert_eq!(run("SELECT COUNT(*) FROM R"), Value::Int(0));
        assert_eq!(run("SELECT MAX(R.r) FROM R"), Value::OptInt(None));
    }

    #[test]
    fn unknown_names() {
        let run = |s: &str| eval_sql(&parse_sql(s).unwrap(), &db());
        assert_eq!(run("SELECT T.* FROM T"), Err(SqlError::UnknownTable("T".into())));
        assert_eq!(run("SELECT R.zz FROM R"), Err(SqlError::UnknownColumn("R.zz".into())));
        assert_eq!(run("SELECT R.* FROM R LIMIT :k"), Err(SqlError::UnknownParam("k".into())));
    }
}
