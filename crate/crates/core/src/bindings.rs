//! The shared JSON input-binding format:
//!
//! ```json
//! {"R": {"schema": [["a","int"]], "rows": [[1],[3]]}, "k": 2}
//! ```
//!
//! Row arrays follow schema field order. Scalars are JSON numbers or
//! strings; an absent `int?` is `null`.

use std::sync::Arc;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::interp::Bindings;
use crate::types::{conforms, Field, OrderedRelation, Scalar, ScalarType, Schema, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindingError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("bindings must be a JSON object")]
    NotAnObject,
    #[error("binding `{name}`: {message}")]
    Malformed { name: String, message: String },
}

pub fn parse_bindings(text: &str) -> Result<Bindings, BindingError> {
    let doc: Json = serde_json::from_str(text).map_err(|e| BindingError::Json(e.to_string()))?;
    bindings_from_json(&doc)
}

pub fn bindings_from_json(doc: &Json) -> Result<Bindings, BindingError> {
    let obj = doc.as_object().ok_or(BindingError::NotAnObject)?;
    obj.iter()
        .map(|(name, v)| {
            value_from_json(v)
                .map(|val| (name.clone(), val))
                .map_err(|message| BindingError::Malformed { name: name.clone(), message })
        })
        .collect()
}

fn value_from_json(v: &Json) -> Result<Value, String> {
    match v {
        Json::Null => Ok(Value::OptInt(None)),
        Json::Number(n) => n.as_i64().map(Value::Int).ok_or_else(|| format!("{n} is not a 64-bit integer")),
        Json::String(s) => Ok(Value::text(s)),
        Json::Object(o) => {
            let schema = o.get("schema").and_then(Json::as_array).ok_or("missing `schema` array")?;
            let mut fields = Vec::new();
            for f in schema {
                let pair = f.as_array().filter(|p| p.len() == 2).ok_or("schema entries are [name, type] pairs")?;
                let name = pair[0].as_str().ok_or("field name must be a string")?;
                let ty = match pair[1].as_str() {
                    Some("int") => ScalarType::Int,
                    Some("text") => ScalarType::Text,
                    _ => return Err(format!("field `{name}` has unknown type {}", pair[1])),
                };
                fields.push(Field::new(name, ty));
            }
            let schema = Arc::new(Schema::new(fields));
            let rows = o.get("rows").and_then(Json::as_array).ok_or("missing `rows` array")?;
            let mut out = Vec::with_capacity(rows.len());
            for (n, r) in rows.iter().enumerate() {
                let cells = r.as_array().ok_or_else(|| format!("row {n} is not an array"))?;
                let row: Vec<Scalar> = cells
                    .iter()
                    .map(|c| match c {
                        Json::Number(x) => x.as_i64().map(Scalar::Int).ok_or_else(|| format!("row {n}: bad integer")),
                        Json::String(s) => Ok(Scalar::text(s)),
                        other => Err(format!("row {n}: unsupported cell {other}")),
                    })
                    .collect::<Result<_, _>>()?;
                if !conforms(&schema, &row) {
                    return Err(format!("row {n} does not conform to the schema"));
                }
                out.push(row);
            }
            Ok(Value::Rel(OrderedRelation::new(schema, out)))
        }
        other => Err(format!("unsupported value {other}")),
    }
}

pub fn scalar_to_json(s: &Scalar) -> Json {
    match s {
        Scalar::Int(v) => json!(v),
        Scalar::Text(t) => json!(t.as_ref()),
    }
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Int(x) => json!(x),
        Value::Text(t) => json!(t.as_ref()),
        Value::OptInt(x) => x.map_or(Json::Null, |x| json!(x)),
        Value::Record(schema, row) => {
            let mut m = Map::new();
            for (f, c) in schema.fields.iter().zip(row) {
                m.insert(f.name.clone(), scalar_to_json(c));
            }
            Json::Object(m)
        }
        Value::Rel(r) => relation_to_json(r),
    }
}

pub fn relation_to_json(r: &OrderedRelation) -> Json {
    let schema: Vec<Json> = r.schema.fields.iter().map(|f| json!([f.name, f.ty.to_string()])).collect();
    let rows: Vec<Json> = r.rows.iter().map(|row| Json::Array(row.iter().map(scalar_to_json).collect())).collect();
    json!({ "schema": schema, "rows": rows })
}

pub fn bindings_to_json(b: &Bindings) -> Json {
    Json::Object(b.iter().map(|(k, v)| (k.clone(), value_to_json(v))).collect())
}
