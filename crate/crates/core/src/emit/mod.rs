//! SQL emission for translatable postconditions.
//!
//! Every source table carries a hidden `rid` column holding the row's
//! position. Relation-valued queries always end in `ORDER BY` over the rid
//! of each source, left to right, which makes record order part of the
//! query's meaning.
//!
//! ```text
//! SELECT R.* FROM R WHERE R.a > 2 ORDER BY R.rid
//! SELECT R.name, S.tag FROM R, S WHERE R.id = S.owner ORDER BY R.rid, S.rid LIMIT 2
//! SELECT COALESCE(SUM(R.a), 0) FROM R WHERE R.a > 2
//! ```

mod engine;
mod reader;

use std::fmt::Write as _;

use thiserror::Error;

use crate::tor::{AggKind, ColRef, Operand, Pred, ScalarExpr, TorExpr};

pub use engine::{eval_sql, MiniDb, SqlError};
pub use reader::parse_sql;

/// Name of the hidden ordinal column.
pub const RID: &str = "rid";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SelectItem {
    /// `T.*`: every visible column of a source, in schema order.
    Star(String),
    Column(ColRef),
    /// Aggregate over the filtered sources; `None` column means `COUNT(*)`.
    Agg(AggKind, Option<ColRef>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Limit {
    Int(i64),
    Param(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SqlQuery {
    pub select: Vec<SelectItem>,
    pub from: Vec<String>,
    pub filter: Option<Pred>,
    /// Sources whose rid columns order the result.
    pub order_by: Vec<String>,
    pub limit: Option<Limit>,
}

impl SqlQuery {
    pub fn is_aggregate(&self) -> bool {
        matches!(self.select.as_slice(), [SelectItem::Agg(..)])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("not translatable: {0}")]
    NotTranslatable(String),
}

/// A single SELECT block under construction.
struct Block {
    select: Vec<SelectItem>,
    from: Vec<String>,
    filter: Vec<Pred>,
    limit: Option<Limit>,
}

fn no(msg: &str, e: &TorExpr) -> EmitError {
    EmitError::NotTranslatable(format!("{msg}: {e}"))
}

fn block(e: &TorExpr) -> Result<Block, EmitError> {
    match e {
        TorExpr::Query(r) => {
            Ok(Block { select: vec![SelectItem::Star(r.clone())], from: vec![r.clone()], filter: vec![], limit: None })
        }
        TorExpr::Sel(x, p) => {
            let mut b = block(x)?;
            if b.limit.is_some() {
                return Err(no("selection over a limited query", e));
            }
            if *p != Pred::True {
                b.filter.push(p.clone());
            }
            Ok(b)
        }
        TorExpr::Proj(x, cols) => {
            let mut b = block(x)?;
            b.select = cols.iter().cloned().map(SelectItem::Column).collect();
            Ok(b)
        }
        TorExpr::Top(x, k) => {
            let mut b = block(x)?;
            if b.limit.is_some() {
                return Err(no("nested limits", e));
            }
            b.limit = Some(match k {
                ScalarExpr::Int(n) => Limit::Int(*n),
                ScalarExpr::Var(v) => Limit::Param(v.clone()),
                _ => return Err(no("limit is not a constant or parameter", e)),
            });
            Ok(b)
        }
        TorExpr::Join(l, r, p) => {
            let (a, b) = (block(l)?, block(r)?);
            if a.limit.is_some() || b.limit.is_some() {
                return Err(no("join of limited queries", e));
            }
            if a.from.len() != 1 || b.from.len() != 1 {
                return Err(no("joins of more than two sources", e));
            }
            if a.from == b.from {
                return Err(no("self-join", e));
            }
            let mut filter = a.filter;
            filter.extend(b.filter);
            if *p != Pred::True {
                filter.push(p.clone());
            }
            let mut select = a.select;
            select.extend(b.select);
            Ok(Block { select, from: vec![a.from[0].clone(), b.from[0].clone()], filter, limit: None })
        }
        _ => Err(no("operator has no SELECT image", e)),
    }
}

/// Translates a postcondition expression to a single SELECT.
pub fn to_sql(e: &TorExpr) -> Result<SqlQuery, EmitError> {
    let conj = |f: Vec<Pred>| match Pred::and(f) {
        Pred::True => None,
        p => Some(p),
    };
    if let TorExpr::Agg(kind, col, x) = e {
        let b = block(x)?;
        if b.limit.is_some() {
            return Err(no("aggregate over a limited query", e));
        }
        return Ok(SqlQuery {
            select: vec![SelectItem::Agg(*kind, col.clone())],
            from: b.from,
            filter: conj(b.filter),
            order_by: vec![],
            limit: None,
        });
    }
    let b = block(e)?;
    Ok(SqlQuery { select: b.select, order_by: b.from.clone(), from: b.from, filter: conj(b.filter), limit: b.limit })
}

fn write_operand(out: &mut String, o: &Operand) {
    match o {
        Operand::Field(c) => write!(out, "{c}").unwrap(),
        Operand::Int(k) => write!(out, "{k}").unwrap(),
        Operand::Text(s) => write!(out, "'{}'", s.replace('\'', "''")).unwrap(),
        Operand::Var(v) => write!(out, ":{v}").unwrap(),
    }
}

fn sql_op(op: crate::tor::CmpOp) -> &'static str {
    match op {
        crate::tor::CmpOp::Ne => "<>",
        other => other.symbol(),
    }
}

pub(crate) fn write_pred(out: &mut String, p: &Pred) {
    let grouped = |out: &mut String, q: &Pred| {
        if matches!(q, Pred::And(_) | Pred::Or(_)) {
            out.push('(');
            write_pred(out, q);
            out.push(')');
        } else {
            write_pred(out, q);
        }
    };
    match p {
        Pred::True => out.push_str("TRUE"),
        Pred::Atom(op, a, b) => {
            write_operand(out, a);
            write!(out, " {} ", sql_op(*op)).unwrap();
            write_operand(out, b);
        }
        Pred::And(ps) | Pred::Or(ps) => {
            let sep = if matches!(p, Pred::And(_)) { " AND " } else { " OR " };
            for (k, q) in ps.iter().enumerate() {
                if k > 0 {
                    out.push_str(sep);
                }
                grouped(out, q);
            }
        }
        Pred::Not(q) => {
            out.push_str("NOT (");
            write_pred(out, q);
            out.push(')');
        }
    }
}

/// Byte-stable SQL text.
pub fn render(q: &SqlQuery) -> String {
    let mut out = String::from("SELECT ");
    for (k, item) in q.select.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        match item {
            SelectItem::Star(t) => write!(out, "{t}.*").unwrap(),
            SelectItem::Column(c) => write!(out, "{c}").unwrap(),
            SelectItem::Agg(AggKind::Count, _) => out.push_str("COUNT(*)"),
            SelectItem::Agg(AggKind::Sum, Some(c)) => write!(out, "COALESCE(SUM({c}), 0)").unwrap(),
            SelectItem::Agg(kind, Some(c)) => write!(out, "{}({c})", kind.name().to_uppercase()).unwrap(),
            SelectItem::Agg(kind, None) => write!(out, "{}(*)", kind.name().to_uppercase()).unwrap(),
        }
    }
    write!(out, " FROM {}", q.from.join(", ")).unwrap();
    if let Some(p) = &q.filter {
        out.push_str(" WHERE ");
        write_pred(&mut out, p);
    }
    if !q.order_by.is_empty() {
        let keys: Vec<String> = q.order_by.iter().map(|t| format!("{t}.{RID}")).collect();
        write!(out, " ORDER BY {}", keys.join(", ")).unwrap();
    }
    match &q.limit {
        Some(Limit::Int(k)) => write!(out, " LIMIT {k}").unwrap(),
        Some(Limit::Param(v)) => write!(out, " LIMIT :{v}").unwrap(),
        None => {}
    }
    out
}

impl std::fmt::Display for SqlQuery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render(self))
    }
}
