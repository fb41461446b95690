//! Values shared by the interpreter, the ordered-relation evaluator and the
//! mini SQL engine.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Column type. The kernel language has no floats and no nulls in rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarType {
    Int,
    Text,
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarType::Int => f.write_str("int"),
            ScalarType::Text => f.write_str("text"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Field {
    pub name: String,
    pub ty: ScalarType,
}

impl Field {
    pub fn new(name: impl Into<String>, ty: ScalarType) -> Self {
        Field { name: name.into(), ty }
    }
}

/// Ordered list of uniquely named, typed fields.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Schema {
    pub fields: Vec<Field>,
}

impl Schema {
    pub fn new(fields: Vec<Field>) -> Self {
        Schema { fields }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn types(&self) -> impl Iterator<Item = ScalarType> + '_ {
        self.fields.iter().map(|f| f.ty)
    }

    /// Same arity and the same type at every position; names are ignored.
    pub fn same_shape(&self, other: &Schema) -> bool {
        self.len() == other.len() && self.types().eq(other.types())
    }

    /// Returns the first duplicated field name, if any.
    pub fn duplicate_field(&self) -> Option<&str> {
        for (i, f) in self.fields.iter().enumerate() {
            if self.fields[..i].iter().any(|g| g.name == f.name) {
                return Some(&f.name);
            }
        }
        None
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, fld) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}:{}", fld.name, fld.ty)?;
        }
        Ok(())
    }
}

/// A single field value inside a row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scalar {
    Int(i64),
    Text(Arc<str>),
}

impl Scalar {
    pub fn text(s: &str) -> Self {
        Scalar::Text(Arc::from(s))
    }

    pub fn ty(&self) -> ScalarType {
        match self {
            Scalar::Int(_) => ScalarType::Int,
            Scalar::Text(_) => ScalarType::Text,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Scalar::Int(v) => Some(*v),
            Scalar::Text(_) => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Text(s) => write!(f, "{s:?}"),
        }
    }
}

pub type Row = Vec<Scalar>;

/// Schema-conforming ordered sequence of rows. Row `n` has ordinal `n`.
/// Duplicates are allowed and order is significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderedRelation {
    pub schema: Arc<Schema>,
    pub rows: Vec<Row>,
}

impl OrderedRelation {
    pub fn empty(schema: Arc<Schema>) -> Self {
        OrderedRelation { schema, rows: Vec::new() }
    }

    pub fn new(schema: Arc<Schema>, rows: Vec<Row>) -> Self {
        debug_assert!(rows.iter().all(|r| conforms(&schema, r)));
        OrderedRelation { schema, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Order-sensitive comparison of contents, ignoring field names.
    pub fn same_contents(&self, other: &OrderedRelation) -> bool {
        self.schema.same_shape(&other.schema) && self.rows == other.rows
    }
}

pub fn conforms(schema: &Schema, row: &[Scalar]) -> bool {
    row.len() == schema.len() && row.iter().zip(schema.types()).all(|(v, t)| v.ty() == t)
}

/// Runtime value of a kernel-language variable or a TOR expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Text(Arc<str>),
    /// A record together with the schema it conforms to.
    Record(Arc<Schema>, Row),
    Rel(OrderedRelation),
    /// Result of a min/max accumulator; `None` when it was never updated.
    OptInt(Option<i64>),
}

impl Value {
    pub fn text(s: &str) -> Self {
        Value::Text(Arc::from(s))
    }

    pub fn from_scalar(s: Scalar) -> Self {
        match s {
            Scalar::Int(v) => Value::Int(v),
            Scalar::Text(t) => Value::Text(t),
        }
    }

    pub fn to_scalar(&self) -> Option<Scalar> {
        match self {
            Value::Int(v) => Some(Scalar::Int(*v)),
            Value::Text(t) => Some(Scalar::Text(t.clone())),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_rel(&self) -> Option<&OrderedRelation> {
        match self {
            Value::Rel(r) => Some(r),
            _ => None,
        }
    }

    /// Equality used at every oracle boundary: relations compare
    /// order-sensitively by contents, and a present `OptInt` equals the
    /// plain integer it holds.
    pub fn equivalent(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Rel(a), Value::Rel(b)) => a.same_contents(b),
            (Value::Record(sa, a), Value::Record(sb, b)) => sa.same_shape(sb) && a == b,
            (Value::Int(a), Value::OptInt(Some(b))) | (Value::OptInt(Some(b)), Value::Int(a)) => {
                a == b
            }
            (a, b) => a == b,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Text(t) => write!(f, "{t:?}"),
            Value::OptInt(Some(v)) => write!(f, "{v}"),
            Value::OptInt(None) => f.write_str("none"),
            Value::Record(schema, row) => {
                f.write_str("{")?;
                for (i, (fld, v)) in schema.fields.iter().zip(row).enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}: {v}", fld.name)?;
                }
                f.write_str("}")
            }
            Value::Rel(r) => {
                f.write_str("[")?;
                for (i, row) in r.rows.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str("(")?;
                    for (j, v) in row.iter().enumerate() {
                        if j > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{v}")?;
                    }
                    f.write_str(")")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int_schema(names: &[&str]) -> Arc<Schema> {
        Arc::new(Schema::new(names.iter().map(|n| Field::new(*n, ScalarType::Int)).collect()))
    }

    #[test]
    fn contents_ignore_names_but_not_order() {
        let a = OrderedRelation::new(int_schema(&["a"]), vec![vec![Scalar::Int(1)], vec![Scalar::Int(2)]]);
        let b = OrderedRelation::new(int_schema(&["x"]), vec![vec![Scalar::Int(1)], vec![Scalar::Int(2)]]);
        let c = OrderedRelation::new(int_schema(&["a"]), vec![vec![Scalar::Int(2)], vec![Scalar::Int(1)]]);
        assert!(a.same_contents(&b));
        assert!(!a.same_contents(&c));
    }

    #[test]
    fn opt_int_matches_plain_int() {
        assert!(Value::OptInt(Some(3)).equivalent(&Value::Int(3)));
        assert!(!Value::OptInt(None).equivalent(&Value::Int(0)));
        assert!(Value::OptInt(None).equivalent(&Value::OptInt(None)));
    }

    #[test]
    fn duplicate_fields_detected() {
        assert_eq!(int_schema(&["a", "b", "a"]).duplicate_field(), Some("a"));
        assert_eq!(int_schema(&["a", "b"]).duplicate_field(), None);
    }
}
