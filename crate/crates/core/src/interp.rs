//! Reference big-step interpreter for typed kernel programs. Every other
//! check in the toolchain (bounded verification, differential testing)
//! compares against this.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::frontend::ast::{BinOp, Builtin};
use crate::frontend::{LoopId, TExpr, TExprKind, TStmt, Ty, TypedProgram, VarId, VarKind};
use crate::types::{conforms, OrderedRelation, Scalar, Value};

/// Input bindings keyed by parameter name.
pub type Bindings = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("no binding for parameter `{0}`")]
    MissingInput(String),
    #[error("binding for `{name}` does not have type {expected}")]
    InputType { name: String, expected: String },
}

/// Flat variable store indexed by [`VarId`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Env {
    pub slots: Vec<Value>,
}

impl Env {
    pub fn get(&self, slot: VarId) -> &Value {
        &self.slots[slot]
    }

    fn rel(&self, slot: VarId) -> &OrderedRelation {
        match &self.slots[slot] {
            Value::Rel(r) => r,
            other => panic!("slot {slot} holds {other}, not a relation"),
        }
    }

    fn int(&self, slot: VarId) -> i64 {
        match &self.slots[slot] {
            Value::Int(v) => *v,
            other => panic!("slot {slot} holds {other}, not an int"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Normal,
    Break,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceKind {
    LoopHead(LoopId),
    Exit,
}

/// One observation of the program state: a loop-head visit or the final exit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopHeadState {
    pub kind: TraceKind,
    /// Values of all enclosing loop indices, outermost first.
    pub indices: Vec<(String, i64)>,
    /// Snapshot of every local variable.
    pub vars: BTreeMap<String, Value>,
}

/// Builds the initial store: parameters bound from `inputs`, locals
/// initialised in declaration order, indices at 0.
pub fn initial_env(prog: &TypedProgram, inputs: &Bindings) -> Result<Env, InterpError> {
    let mut slots = Vec::with_capacity(prog.vars.len());
    for v in &prog.vars {
        let value = match v.kind {
            VarKind::Param => {
                let b = inputs.get(&v.name).ok_or_else(|| InterpError::MissingInput(v.name.clone()))?;
                if !value_has_type(b, &v.ty) {
                    return Err(InterpError::InputType { name: v.name.clone(), expected: v.ty.to_string() });
                }
                b.clone()
            }
            VarKind::Local => default_value(&v.ty),
            VarKind::Index(_) => Value::Int(0),
        };
        slots.push(value);
    }
    let mut env = Env { slots };
    for (slot, init) in &prog.inits {
        env.slots[*slot] = eval(init, &env);
    }
    Ok(env)
}

fn default_value(ty: &Ty) -> Value {
    match ty {
        Ty::List(s) => Value::Rel(OrderedRelation::empty(s.clone())),
        Ty::OptInt => Value::OptInt(None),
        Ty::Text => Value::text(""),
        _ => Value::Int(0),
    }
}

/// Whether a bound value fits a parameter type. Relation field names must
/// match the declared schema exactly.
pub fn value_has_type(v: &Value, ty: &Ty) -> bool {
    match (v, ty) {
        (Value::Int(_), Ty::Int) | (Value::Text(_), Ty::Text) => true,
        (Value::Rel(r), Ty::Rel(s)) => *r.schema == **s && r.rows.iter().all(|row| conforms(s, row)),
        _ => false,
    }
}

/// Runs the program and returns the value of its result variable.
pub fn run(prog: &TypedProgram, inputs: &Bindings) -> Result<Value, InterpError> {
    let mut env = initial_env(prog, inputs)?;
    exec_block(prog, &prog.body, &mut env, &mut NoTrace);
    Ok(env.slots[prog.result].clone())
}

/// Runs the program recording every loop-head visit and the exit state.
pub fn trace(prog: &TypedProgram, inputs: &Bindings) -> Result<Vec<LoopHeadState>, InterpError> {
    let mut env = initial_env(prog, inputs)?;
    let mut rec = Recorder { steps: Vec::new() };
    exec_block(prog, &prog.body, &mut env, &mut rec);
    let vars = snapshot(prog, &env);
    rec.steps.push(LoopHeadState { kind: TraceKind::Exit, indices: Vec::new(), vars });
    Ok(rec.steps)
}

pub(crate) trait Tracer {
    fn loop_head(&mut self, prog: &TypedProgram, id: LoopId, env: &Env);
}

pub(crate) struct NoTrace;

impl Tracer for NoTrace {
    #[inline]
    fn loop_head(&mut self, _: &TypedProgram, _: LoopId, _: &Env) {}
}

struct Recorder {
    steps: Vec<LoopHeadState>,
}

impl Tracer for Recorder {
    fn loop_head(&mut self, prog: &TypedProgram, id: LoopId, env: &Env) {
        let mut indices = Vec::new();
        let mut cur = Some(id);
        while let Some(l) = cur {
            let info = &prog.loops[l];
            indices.push((info.index_name.clone(), env.int(info.index)));
            cur = info.parent;
        }
        indices.reverse();
        self.steps.push(LoopHeadState { kind: TraceKind::LoopHead(id), indices, vars: snapshot(prog, env) });
    }
}

fn snapshot(prog: &TypedProgram, env: &Env) -> BTreeMap<String, Value> {
    prog.vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Local)
        .map(|(slot, v)| (v.name.clone(), env.slots[slot].clone()))
        .collect()
}

pub(crate) fn exec_block<T: Tracer>(prog: &TypedProgram, stmts: &[TStmt], env: &mut Env, t: &mut T) -> Flow {
    for s in stmts {
        if exec_stmt(prog, s, env, t) == Flow::Break {
            return Flow::Break;
        }
    }
    Flow::Normal
}

/// Executes a statement sequence without tracing. Used by the verifier to
/// run program fragments from a reconstructed state.
pub fn exec(prog: &TypedProgram, stmts: &[TStmt], env: &mut Env) -> Flow {
    exec_block(prog, stmts, env, &mut NoTrace)
}

fn exec_stmt<T: Tracer>(prog: &TypedProgram, s: &TStmt, env: &mut Env, t: &mut T) -> Flow {
    match s {
        TStmt::Assign { target, value } => {
            let v = eval(value, env);
            env.slots[*target] = coerce(v, &prog.vars[*target].ty);
            Flow::Normal
        }
        TStmt::Append { target, value } => {
            let row = match eval(value, env) {
                Value::Record(_, row) => row,
                other => panic!("append of non-record {other}"),
            };
            match &mut env.slots[*target] {
                Value::Rel(r) => r.rows.push(row),
                other => panic!("append to non-list {other}"),
            }
            Flow::Normal
        }
        TStmt::If { cond, then_branch, else_branch } => {
            if truthy(&eval(cond, env)) {
                exec_block(prog, then_branch, env, t)
            } else {
                exec_block(prog, else_branch, env, t)
            }
        }
        TStmt::For { id, body } => {
            run_loop(prog, *id, body, 0, env, t);
            Flow::Normal
        }
        TStmt::Break => Flow::Break,
    }
}

/// Runs loop `id` starting at index `from` until exhaustion or break.
/// Returns the index at which the loop stopped.
pub(crate) fn run_loop<T: Tracer>(
    prog: &TypedProgram,
    id: LoopId,
    body: &[TStmt],
    from: i64,
    env: &mut Env,
    t: &mut T,
) -> i64 {
    let info = &prog.loops[id];
    let size = env.rel(info.relation).len() as i64;
    let mut i = from;
    loop {
        env.slots[info.index] = Value::Int(i);
        t.loop_head(prog, id, env);
        if i >= size {
            return i;
        }
        if exec_block(prog, body, env, t) == Flow::Break {
            return i;
        }
        i += 1;
    }
}

fn coerce(v: Value, ty: &Ty) -> Value {
    match (v, ty) {
        (Value::Int(x), Ty::OptInt) => Value::OptInt(Some(x)),
        (v, _) => v,
    }
}

fn truthy(v: &Value) -> bool {
    matches!(v, Value::Int(1))
}

fn bool_value(b: bool) -> Value {
    Value::Int(b as i64)
}

fn opt(v: &Value) -> Option<i64> {
    match v {
        Value::Int(x) => Some(*x),
        Value::OptInt(x) => *x,
        other => panic!("expected numeric value, got {other}"),
    }
}

/// Evaluates an expression. Booleans are represented as `Int(0)`/`Int(1)`.
pub fn eval(e: &TExpr, env: &Env) -> Value {
    match &e.kind {
        TExprKind::Int(v) => Value::Int(*v),
        TExprKind::Text(s) => Value::Text(s.clone()),
        TExprKind::None => Value::OptInt(None),
        TExprKind::Var(slot) => env.slots[*slot].clone(),
        TExprKind::Row { rel, index } => {
            let r = env.rel(*rel);
            let row = r.rows[env.int(*index) as usize].clone();
            Value::Record(r.schema.clone(), row)
        }
        TExprKind::Field { rel, index, pos } => {
            let r = env.rel(*rel);
            Value::from_scalar(r.rows[env.int(*index) as usize][*pos].clone())
        }
        TExprKind::Neg(inner) => match eval(inner, env) {
            Value::Int(v) => Value::Int(-v),
            other => panic!("negation of {other}"),
        },
        TExprKind::Not(inner) => bool_value(!truthy(&eval(inner, env))),
        TExprKind::Binary(op, a, b) => {
            if *op == BinOp::And {
                return bool_value(truthy(&eval(a, env)) && truthy(&eval(b, env)));
            }
            if *op == BinOp::Or {
                return bool_value(truthy(&eval(a, env)) || truthy(&eval(b, env)));
            }
            let (x, y) = (eval(a, env), eval(b, env));
            match op {
                BinOp::Add => Value::Int(x.as_int().unwrap() + y.as_int().unwrap()),
                BinOp::Sub => Value::Int(x.as_int().unwrap() - y.as_int().unwrap()),
                BinOp::Eq => bool_value(x == y),
                BinOp::Ne => bool_value(x != y),
                BinOp::Lt => bool_value(x.as_int() < y.as_int()),
                BinOp::Le => bool_value(x.as_int() <= y.as_int()),
                BinOp::Gt => bool_value(x.as_int() > y.as_int()),
                BinOp::Ge => bool_value(x.as_int() >= y.as_int()),
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
        TExprKind::Call(f, a, b) => {
            let (x, y) = (opt(&eval(a, env)), opt(&eval(b, env)));
            let r = match (x, y) {
                (Some(x), Some(y)) => Some(if *f == Builtin::Min { x.min(y) } else { x.max(y) }),
                (x, None) => x,
                (None, y) => y,
            };
            match e.ty {
                Ty::OptInt => Value::OptInt(r),
                _ => Value::Int(r.expect("int-typed min/max has present operands")),
            }
        }
        TExprKind::Record(items) => {
            let Ty::Record(schema) = &e.ty else { unreachable!() };
            let row: Vec<Scalar> =
                items.iter().map(|i| eval(i, env).to_scalar().expect("record fields are scalar")).collect();
            Value::Record(Arc::clone(schema), row)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load;
    use crate::types::{Field, ScalarType, Schema};

    fn rel_a(vals: &[i64]) -> Value {
        let schema = Arc::new(Schema::new(vec![Field::new("a", ScalarType::Int)]));
        Value::Rel(OrderedRelation::new(schema, vals.iter().map(|v| vec![Scalar::Int(*v)]).collect()))
    }

    const SELECTION: &str = "fn sel(R: rel(a:int)) { var out: list(a:int); for i in 0..size(R) { if R[i].a > 2 { out.append(R[i]); } } return out; }";

    fn ints(v: &Value) -> Vec<i64> {
        v.as_rel().unwrap().rows.iter().map(|r| r[0].as_int().unwrap()).collect()
    }

    #[test]
    fn selection_keeps_order() {
        let p = load(SELECTION).unwrap();
        let out = run(&p, &Bindings::from([("R".to_string(), rel_a(&[1, 3, 2, 5]))])).unwrap();
        assert_eq!(ints(&out), vec![3, 5]);
    }

    #[test]
    fn accumulators_on_empty_input() {
        let sum = load("fn s(R: rel(a:int)) { var s: int = 0; for i in 0..size(R) { s = s + R[i].a; } return s; }").unwrap();
        let mx = load("fn m(R: rel(a:int)) { var m: int?; for i in 0..size(R) { m = max(m, R[i].a); } return m; }").unwrap();
        let empty = Bindings::from([("R".to_string(), rel_a(&[]))]);
        assert_eq!(run(&sum, &empty).unwrap(), Value::Int(0));
        assert_eq!(run(&mx, &empty).unwrap(), Value::OptInt(None));
        let some = Bindings::from([("R".to_string(), rel_a(&[2, 7, 1]))]);
        assert_eq!(run(&mx, &some).unwrap(), Value::OptInt(Some(7)));
    }

    #[test]
    fn trace_counts_head_visits() {
        let p = load(SELECTION).unwrap();
        let steps = trace(&p, &Bindings::from([("R".to_string(), rel_a(&[4, 1]))])).unwrap();
        let heads: Vec<i64> = steps
            .iter()
            .filter(|s| s.kind == TraceKind::LoopHead(0))
            .map(|s| s.indices[0].1)
            .collect();
        assert_eq!(heads, vec![0, 1, 2]);
        assert_eq!(steps.last().unwrap().kind, TraceKind::Exit);
        let empty = trace(&p, &Bindings::from([("R".to_string(), rel_a(&[]))])).unwrap();
        assert_eq!(empty.len(), 2);
    }

    #[test]
    fn break_exits_innermost_loop() {
        let p = load(
            "fn f(R: rel(a:int)) { var out: list(a:int); for i in 0..size(R) { out.append(R[i]); if R[i].a == 0 { break; } } return out; }",
        )
        .unwrap();
        let out = run(&p, &Bindings::from([("R".to_string(), rel_a(&[3, 0, 5]))])).unwrap();
        assert_eq!(ints(&out), vec![3, 0]);
    }

    #[test]
    fn missing_and_mistyped_inputs() {
        let p = load(SELECTION).unwrap();
        assert_eq!(run(&p, &Bindings::new()), Err(InterpError::MissingInput("R".into())));
        let bad = Bindings::from([("R".to_string(), Value::Int(3))]);
        assert!(matches!(run(&p, &bad), Err(InterpError::InputType { .. })));
    }
}
