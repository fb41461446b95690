//! Expressions of the theory of ordered relations and their predicate
//! language, plus static sort checking.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::TorError;
use crate::types::{Field, ScalarType, Schema};

/// A column of a relation-valued expression, qualified by the relation
/// parameter it originates from (`R.a`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColRef {
    pub qual: String,
    pub name: String,
}

impl ColRef {
    pub fn new(qual: impl Into<String>, name: impl Into<String>) -> Self {
        ColRef { qual: qual.into(), name: name.into() }
    }

    /// Whether a (qualified) schema field name denotes this column.
    pub fn matches(&self, field_name: &str) -> bool {
        field_name.len() == self.qual.len() + 1 + self.name.len()
            && field_name.starts_with(&self.qual)
            && field_name.as_bytes()[self.qual.len()] == b'.'
            && field_name.ends_with(&self.name)
    }
}

impl fmt::Display for ColRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.qual, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Column {
    pub col: ColRef,
    pub ty: ScalarType,
}

/// Schema of a relation-valued TOR expression: qualified, typed columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct TorSchema {
    pub cols: Vec<Column>,
}

impl TorSchema {
    /// Columns of relation parameter `rel` with the given field schema.
    pub fn of_relation(rel: &str, schema: &Schema) -> Self {
        TorSchema {
            cols: schema.fields.iter().map(|f| Column { col: ColRef::new(rel, f.name.clone()), ty: f.ty }).collect(),
        }
    }

    pub fn position(&self, c: &ColRef) -> Option<usize> {
        self.cols.iter().position(|x| x.col == *c)
    }

    pub fn type_of(&self, c: &ColRef) -> Option<ScalarType> {
        self.cols.iter().find(|x| x.col == *c).map(|x| x.ty)
    }

    pub fn same_shape(&self, other: &TorSchema) -> bool {
        self.cols.len() == other.cols.len() && self.cols.iter().zip(&other.cols).all(|(a, b)| a.ty == b.ty)
    }

    /// Field schema with qualified names, as carried by evaluated relations.
    pub fn to_schema(&self) -> Schema {
        Schema::new(self.cols.iter().map(|c| Field::new(c.col.to_string(), c.ty)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggKind {
    Sum,
    Count,
    Min,
    Max,
}

impl AggKind {
    pub const ALL: [AggKind; 4] = [AggKind::Sum, AggKind::Count, AggKind::Min, AggKind::Max];

    pub fn name(self) -> &'static str {
        match self {
            AggKind::Sum => "sum",
            AggKind::Count => "count",
            AggKind::Min => "min",
            AggKind::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator with its operands exchanged: `a < b` iff `b > a`.
    pub fn flipped(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }

    pub fn is_symmetric(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    pub fn applies_to(self, ty: ScalarType) -> bool {
        ty == ScalarType::Int || self.is_symmetric()
    }

    pub fn holds<T: Ord>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

/// Operand of a predicate atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    Field(ColRef),
    Int(i64),
    Text(String),
    /// A scalar program parameter.
    Var(String),
}

impl Operand {
    pub fn is_constant(&self) -> bool {
        matches!(self, Operand::Int(_) | Operand::Text(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    True,
    Atom(CmpOp, Operand, Operand),
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Not(Box<Pred>),
}

impl Pred {
    /// Builds an atom in canonical form: a constant operand goes on the right.
    pub fn atom(op: CmpOp, lhs: Operand, rhs: Operand) -> Pred {
        if lhs.is_constant() && !rhs.is_constant() {
            Pred::Atom(op.flipped(), rhs, lhs)
        } else {
            Pred::Atom(op, lhs, rhs)
        }
    }

    /// Conjunction of `parts`, flattening nested conjunctions and dropping
    /// `true` and repeated conjuncts.
    pub fn and(parts: Vec<Pred>) -> Pred {
        let mut flat: Vec<Pred> = Vec::new();
        for p in parts {
            match p {
                Pred::True => {}
                Pred::And(inner) => {
                    for q in inner {
                        if !flat.contains(&q) {
                            flat.push(q);
                        }
                    }
                }
                other => {
                    if !flat.contains(&other) {
                        flat.push(other);
                    }
                }
            }
        }
        match flat.len() {
            0 => Pred::True,
            1 => flat.pop().unwrap(),
            _ => Pred::And(flat),
        }
    }

    pub fn fields(&self, out: &mut Vec<ColRef>) {
        match self {
            Pred::True => {}
            Pred::Atom(_, a, b) => {
                for o in [a, b] {
                    if let Operand::Field(c) = o {
                        out.push(c.clone());
                    }
                }
            }
            Pred::And(ps) | Pred::Or(ps) => ps.iter().for_each(|p| p.fields(out)),
            Pred::Not(p) => p.fields(out),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Pred::True | Pred::Atom(..) => 1,
            Pred::And(ps) | Pred::Or(ps) => 1 + ps.iter().map(Pred::node_count).sum::<usize>(),
            Pred::Not(p) => 1 + p.node_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalarExpr {
    Int(i64),
    /// Scalar parameter or loop index.
    Var(String),
    Size(Box<TorExpr>),
    Add(Box<ScalarExpr>, Box<ScalarExpr>),
    Sub(Box<ScalarExpr>, Box<ScalarExpr>),
}

impl ScalarExpr {
    pub fn var(name: impl Into<String>) -> Self {
        ScalarExpr::Var(name.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TorExpr {
    Query(String),
    Empty(TorSchema),
    Sel(Box<TorExpr>, Pred),
    Proj(Box<TorExpr>, Vec<ColRef>),
    Join(Box<TorExpr>, Box<TorExpr>, Pred),
    Top(Box<TorExpr>, ScalarExpr),
    /// `Append(e, rec)` where `rec` is record-valued.
    Append(Box<TorExpr>, Box<TorExpr>),
    Concat(Box<TorExpr>, Box<TorExpr>),
    /// Aggregate over a column; `Count` carries no column.
    Agg(AggKind, Option<ColRef>, Box<TorExpr>),
    Get(Box<TorExpr>, ScalarExpr),
    Size(Box<TorExpr>),
}

/// Shorthand constructors.
impl TorExpr {
    pub fn query(r: impl Into<String>) -> Self {
        TorExpr::Query(r.into())
    }

    pub fn sel(self, p: Pred) -> Self {
        TorExpr::Sel(Box::new(self), p)
    }

    pub fn proj(self, cols: Vec<ColRef>) -> Self {
        TorExpr::Proj(Box::new(self), cols)
    }

    pub fn join(self, r: TorExpr, p: Pred) -> Self {
        TorExpr::Join(Box::new(self), Box::new(r), p)
    }

    pub fn top(self, k: ScalarExpr) -> Self {
        TorExpr::Top(Box::new(self), k)
    }

    pub fn append(self, rec: TorExpr) -> Self {
        TorExpr::Append(Box::new(self), Box::new(rec))
    }

    pub fn concat(self, r: TorExpr) -> Self {
        TorExpr::Concat(Box::new(self), Box::new(r))
    }

    pub fn agg(kind: AggKind, col: Option<ColRef>, e: TorExpr) -> Self {
        TorExpr::Agg(kind, col, Box::new(e))
    }

    pub fn get(self, idx: ScalarExpr) -> Self {
        TorExpr::Get(Box::new(self), idx)
    }

    pub fn size(self) -> Self {
        TorExpr::Size(Box::new(self))
    }

    pub fn node_count(&self) -> usize {
        fn scalar(s: &ScalarExpr) -> usize {
            match s {
                ScalarExpr::Int(_) | ScalarExpr::Var(_) => 1,
                ScalarExpr::Size(e) => 1 + e.node_count(),
                ScalarExpr::Add(a, b) | ScalarExpr::Sub(a, b) => 1 + scalar(a) + scalar(b),
            }
        }
        1 + match self {
            TorExpr::Query(_) | TorExpr::Empty(_) => 0,
            TorExpr::Sel(e, p) => e.node_count() + p.node_count(),
            TorExpr::Proj(e, _) | TorExpr::Agg(_, _, e) | TorExpr::Size(e) => e.node_count(),
            TorExpr::Join(l, r, p) => l.node_count() + r.node_count() + p.node_count(),
            TorExpr::Top(e, k) | TorExpr::Get(e, k) => e.node_count() + scalar(k),
            TorExpr::Append(a, b) | TorExpr::Concat(a, b) => a.node_count() + b.node_count(),
        }
    }

    pub fn depth(&self) -> usize {
        1 + match self {
            TorExpr::Query(_) | TorExpr::Empty(_) => 0,
            TorExpr::Sel(e, _)
            | TorExpr::Proj(e, _)
            | TorExpr::Agg(_, _, e)
            | TorExpr::Size(e)
            | TorExpr::Top(e, _)
            | TorExpr::Get(e, _) => e.depth(),
            TorExpr::Join(a, b, _) | TorExpr::Append(a, b) | TorExpr::Concat(a, b) => a.depth().max(b.depth()),
        }
    }

    /// Names of relation parameters referenced by `Query` leaves.
    pub fn relations(&self, out: &mut Vec<String>) {
        self.visit(&mut |e| {
            if let TorExpr::Query(r) = e {
                if !out.contains(r) {
                    out.push(r.clone());
                }
            }
        });
    }

    /// Pre-order traversal over every TOR sub-expression, including those
    /// nested in scalar positions.
    pub fn visit(&self, f: &mut impl FnMut(&TorExpr)) {
        fn scalar(s: &ScalarExpr, f: &mut impl FnMut(&TorExpr)) {
            match s {
                ScalarExpr::Size(e) => e.visit(f),
                ScalarExpr::Add(a, b) | ScalarExpr::Sub(a, b) => {
                    scalar(a, f);
                    scalar(b, f);
                }
                _ => {}
            }
        }
        f(self);
        match self {
            TorExpr::Query(_) | TorExpr::Empty(_) => {}
            TorExpr::Sel(e, _) | TorExpr::Proj(e, _) | TorExpr::Agg(_, _, e) | TorExpr::Size(e) => e.visit(f),
            TorExpr::Top(e, k) | TorExpr::Get(e, k) => {
                e.visit(f);
                scalar(k, f);
            }
            TorExpr::Join(a, b, _) | TorExpr::Append(a, b) | TorExpr::Concat(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }
}

/// Static sort of a TOR expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sort {
    Rel(TorSchema),
    Record(TorSchema),
    Int,
    OptInt,
}

/// Names visible to sort checking: relation parameters with their field
/// schemas, and the types of scalar names (parameters and loop indices).
#[derive(Debug, Clone, Default)]
pub struct SortCtx {
    pub relations: BTreeMap<String, Arc<Schema>>,
    pub scalars: BTreeMap<String, ScalarType>,
}

impl SortCtx {
    pub fn sort(&self, e: &TorExpr) -> Result<Sort, TorError> {
        let schema_err = |m: String| Err(TorError::Schema(m));
        match e {
            TorExpr::Query(r) => match self.relations.get(r) {
                Some(s) => Ok(Sort::Rel(TorSchema::of_relation(r, s))),
                None => Err(TorError::UnboundName(r.clone())),
            },
            TorExpr::Empty(s) => Ok(Sort::Rel(s.clone())),
            TorExpr::Sel(inner, p) => {
                let s = self.rel(inner)?;
                self.check_pred(p, &s)?;
                Ok(Sort::Rel(s))
            }
            TorExpr::Proj(inner, cols) => {
                let s = self.rel(inner)?;
                if cols.is_empty() {
                    return schema_err("projection onto no columns".into());
                }
                let mut out = Vec::new();
                for c in cols {
                    match s.type_of(c) {
                        Some(ty) => out.push(Column { col: c.clone(), ty }),
                        None => return schema_err(format!("projected column {c} not in operand")),
                    }
                }
                Ok(Sort::Rel(TorSchema { cols: out }))
            }
            TorExpr::Join(l, r, p) => {
                let (ls, rs) = (self.rel(l)?, self.rel(r)?);
                if let Some(c) = ls.cols.iter().find(|c| rs.position(&c.col).is_some()) {
                    return schema_err(format!("join operands share column {}", c.col));
                }
                let mut cols = ls.cols;
                cols.extend(rs.cols);
                let s = TorSchema { cols };
                self.check_pred(p, &s)?;
                Ok(Sort::Rel(s))
            }
            TorExpr::Top(inner, k) => {
                let s = self.rel(inner)?;
                self.check_scalar(k)?;
                Ok(Sort::Rel(s))
            }
            TorExpr::Append(inner, rec) => {
                let s = self.rel(inner)?;
                match self.sort(rec)? {
                    Sort::Record(rs) if rs.same_shape(&s) => Ok(Sort::Rel(s)),
                    other => schema_err(format!("cannot append {other:?} to relation")),
                }
            }
            TorExpr::Concat(l, r) => {
                let (ls, rs) = (self.rel(l)?, self.rel(r)?);
                if !ls.same_shape(&rs) {
                    return schema_err("concatenated relations differ in shape".into());
                }
                Ok(Sort::Rel(ls))
            }
            TorExpr::Agg(kind, col, inner) => {
                let s = self.rel(inner)?;
                match (kind, col) {
                    (AggKind::Count, None) => Ok(Sort::Int),
                    (AggKind::Count, Some(_)) => schema_err("count takes no column".into()),
                    (_, None) => schema_err(format!("{} needs a column", kind.name())),
                    (_, Some(c)) => match s.type_of(c) {
                        Some(ScalarType::Int) if *kind == AggKind::Sum => Ok(Sort::Int),
                        Some(ScalarType::Int) => Ok(Sort::OptInt),
                        Some(ScalarType::Text) => schema_err(format!("cannot aggregate text column {c}")),
                        None => schema_err(format!("aggregated column {c} not in operand")),
                    },
                }
            }
            TorExpr::Get(inner, k) => {
                let s = self.rel(inner)?;
                self.check_scalar(k)?;
                Ok(Sort::Record(s))
            }
            TorExpr::Size(inner) => {
                self.rel(inner)?;
                Ok(Sort::Int)
            }
        }
    }

    pub fn rel(&self, e: &TorExpr) -> Result<TorSchema, TorError> {
        match self.sort(e)? {
            Sort::Rel(s) => Ok(s),
            other => Err(TorError::Schema(format!("expected a relation, found {other:?}"))),
        }
    }

    pub fn check_scalar(&self, k: &ScalarExpr) -> Result<(), TorError> {
        match k {
            ScalarExpr::Int(_) => Ok(()),
            ScalarExpr::Var(v) => match self.scalars.get(v) {
                Some(ScalarType::Int) => Ok(()),
                Some(ScalarType::Text) => Err(TorError::Schema(format!("`{v}` is text, expected int"))),
                None => Err(TorError::UnboundName(v.clone())),
            },
            ScalarExpr::Size(e) => self.rel(e).map(|_| ()),
            ScalarExpr::Add(a, b) | ScalarExpr::Sub(a, b) => {
                self.check_scalar(a)?;
                self.check_scalar(b)
            }
        }
    }

    fn operand_type(&self, o: &Operand, s: &TorSchema) -> Result<ScalarType, TorError> {
        match o {
            Operand::Field(c) => {
                s.type_of(c).ok_or_else(|| TorError::Schema(format!("predicate column {c} not in operand")))
            }
            Operand::Int(_) => Ok(ScalarType::Int),
            Operand::Text(_) => Ok(ScalarType::Text),
            Operand::Var(v) => self.scalars.get(v).copied().ok_or_else(|| TorError::UnboundName(v.clone())),
        }
    }

    pub fn check_pred(&self, p: &Pred, s: &TorSchema) -> Result<(), TorError> {
        match p {
            Pred::True => Ok(()),
            Pred::Atom(op, a, b) => {
                let (ta, tb) = (self.operand_type(a, s)?, self.operand_type(b, s)?);
                if ta != tb || !op.applies_to(ta) {
                    return Err(TorError::Schema(format!("ill-typed atom {}", super::text::pred_text(p))));
                }
                Ok(())
            }
            Pred::And(ps) | Pred::Or(ps) => ps.iter().try_for_each(|q| self.check_pred(q, s)),
            Pred::Not(q) => self.check_pred(q, s),
        }
    }
}
