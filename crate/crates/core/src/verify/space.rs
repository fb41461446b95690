//! Bounded input spaces.
//!
//! Relations are enumerated by size ascending, then row-lexicographically.
//! Rows themselves are ordered lexicographically over the field domains
//! (integers ascending, text in domain order). Parameters combine as a
//! cartesian product in declaration order with the last parameter varying
//! fastest.

use std::sync::Arc;

use super::Bounds;
use crate::frontend::{Ty, TypedProgram};
use crate::interp::Bindings;
use crate::types::{OrderedRelation, Row, Scalar, ScalarType, Schema, Value};

fn domain(ty: ScalarType, b: &Bounds) -> Vec<Scalar> {
    match ty {
        ScalarType::Int => (0..=b.int_domain).map(Scalar::Int).collect(),
        ScalarType::Text => b.text_domain.iter().map(|t| Scalar::text(t)).collect(),
    }
}

/// Every row over the schema's field domains, in lexicographic order.
pub fn rows(schema: &Schema, b: &Bounds) -> Vec<Row> {
    let mut out: Vec<Row> = vec![Vec::new()];
    for f in &schema.fields {
        let d = domain(f.ty, b);
        out = out
            .iter()
            .flat_map(|prefix| {
                d.iter().map(move |v| {
                    let mut r = prefix.clone();
                    r.push(v.clone());
                    r
                })
            })
            .collect();
    }
    out
}

/// Every relation of at most `b.max_relation_size` rows, size ascending,
/// then row-lexicographic.
pub fn relations(schema: &Arc<Schema>, b: &Bounds) -> Vec<OrderedRelation> {
    let domain = rows(schema, b);
    let mut out = vec![OrderedRelation::empty(schema.clone())];
    let mut layer: Vec<Vec<Row>> = vec![Vec::new()];
    for _ in 0..b.max_relation_size {
        layer = layer
            .iter()
            .flat_map(|prefix| {
                domain.iter().map(move |r| {
                    let mut rs = prefix.clone();
                    rs.push(r.clone());
                    rs
                })
            })
            .collect();
        out.extend(layer.iter().map(|rs| OrderedRelation::new(schema.clone(), rs.clone())));
    }
    out
}

/// The finite set of program inputs admitted by a [`Bounds`].
#[derive(Debug, Clone)]
pub struct InputSpace {
    params: Vec<(String, Vec<Value>)>,
}

impl InputSpace {
    pub fn new(prog: &TypedProgram, b: &Bounds) -> Self {
        let params = prog
            .params()
            .iter()
            .map(|p| {
                let values = match &p.ty {
                    Ty::Rel(s) => relations(s, b).into_iter().map(Value::Rel).collect(),
                    Ty::Int => domain(ScalarType::Int, b).into_iter().map(Value::from_scalar).collect(),
                    Ty::Text => domain(ScalarType::Text, b).into_iter().map(Value::from_scalar).collect(),
                    other => unreachable!("parameters cannot have type {other}"),
                };
                (p.name.clone(), values)
            })
            .collect();
        InputSpace { params }
    }

    /// Number of inputs in the space.
    pub fn len(&self) -> u64 {
        self.params.iter().map(|(_, vs)| vs.len() as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self, name: &str) -> Option<&[Value]> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Sum over the space of the product of the sizes of the named relation
    /// parameters. With no names this is [`InputSpace::len`].
    pub fn weighted_len(&self, rels: &[&str]) -> u64 {
        self.params
            .iter()
            .map(|(n, vs)| {
                if rels.contains(&n.as_str()) {
                    vs.iter().map(|v| v.as_rel().map_or(0, |r| r.len() as u64)).sum()
                } else {
                    vs.len() as u64
                }
            })
            .product()
    }

    pub fn iter(&self) -> impl Iterator<Item = Bindings> + '_ {
        let radix: Vec<usize> = self.params.iter().map(|(_, v)| v.len()).collect();
        let total = self.len();
        (0..total).map(move |mut n| {
            let mut digits = vec![0usize; radix.len()];
            for k in (0..radix.len()).rev() {
                digits[k] = (n % radix[k] as u64) as usize;
                n /= radix[k] as u64;
            }
            self.params.iter().zip(digits).map(|((name, vs), d)| (name.clone(), vs[d].clone())).collect()
        })
    }
}
