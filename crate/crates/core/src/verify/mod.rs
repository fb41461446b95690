//! Verification conditions for candidate invariants and their bounded
//! inductive checking.
//!
//! Each loop contributes, in pre-order over the loop nest, an initiation, a
//! preservation, a break-exit (only if the loop has a guarded break) and an
//! exit condition. A condition is decided by enumerating every input within
//! [`Bounds`] and every in-range index assignment, reconstructing the
//! loop-head state from the invariant's defining equalities, running the
//! relevant program fragment with the interpreter and comparing against the
//! TOR evaluation of the invariant or postcondition.

pub mod space;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use thiserror::Error;

pub use space::{relations, rows, InputSpace};

use crate::bindings::bindings_to_json;
use crate::frontend::{LoopId, TStmt, Ty, TypedProgram, VarId};
use crate::interp::{exec, initial_env, Bindings, Env, Flow};
use crate::synth::Candidate;
use crate::tor::{Plan, PlanValue, Sort, SortCtx};
use crate::types::{OrderedRelation, ScalarType, Value};

/// Limits of the bounded input space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Bounds {
    pub max_relation_size: usize,
    /// Integers range over `0..=int_domain`.
    pub int_domain: i64,
    pub text_domain: Vec<String>,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { max_relation_size: 3, int_domain: 2, text_domain: vec!["a".into(), "b".into()] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VcKind {
    Initiation,
    Preservation,
    BreakExit,
    Exit,
}

impl VcKind {
    pub fn name(self) -> &'static str {
        match self {
            VcKind::Initiation => "initiation",
            VcKind::Preservation => "preservation",
            VcKind::BreakExit => "break-exit",
            VcKind::Exit => "exit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VerificationCondition {
    pub loop_id: LoopId,
    pub kind: VcKind,
}

impl fmt::Display for VerificationCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(L{})", self.kind.name(), self.loop_id)
    }
}

impl std::str::FromStr for VerificationCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = s.split_once("(L").ok_or_else(|| format!("malformed condition `{s}`"))?;
        let id = rest.strip_suffix(')').and_then(|n| n.parse().ok()).ok_or_else(|| format!("malformed condition `{s}`"))?;
        let kind = [VcKind::Initiation, VcKind::Preservation, VcKind::BreakExit, VcKind::Exit]
            .into_iter()
            .find(|k| k.name() == kind)
            .ok_or_else(|| format!("unknown condition kind `{kind}`"))?;
        Ok(VerificationCondition { loop_id: id, kind })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("unsupported program shape: {0}")]
    UnsupportedShape(String),
    #[error("candidate is not checkable: {0}")]
    NonCheckable(String),
}

/// A concrete violation: the inputs, the loop indices at the violating
/// loop-head state and the failed condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub vc: VerificationCondition,
    pub inputs: Bindings,
    /// Loop indices, outermost first.
    pub indices: Vec<(String, i64)>,
    pub detail: String,
}

impl Counterexample {
    pub fn to_json(&self) -> Json {
        let indices: serde_json::Map<String, Json> = self.indices.iter().map(|(n, v)| (n.clone(), json!(v))).collect();
        json!({
            "vc": self.vc.to_string(),
            "inputs": bindings_to_json(&self.inputs),
            "indices": indices,
            "detail": self.detail,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Counterexample(Box<Counterexample>),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Outcome of checking one condition, with the number of instances examined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub instances: u64,
}

/// Outcome of validating a whole candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validation {
    pub verdict: Verdict,
    pub vcs_checked: u64,
    pub instances: u64,
}

/// Decision procedure interface. [`BoundedChecker`] is the shipped backend;
/// a symbolic prover can implement the same trait.
pub trait ProverBackend: Send + Sync {
    fn name(&self) -> &str;
    fn decide(&self, prog: &TypedProgram, cand: &Candidate, vc: VerificationCondition) -> Result<Decision, VerifyError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Valid,
    Counterexample(Box<Counterexample>),
    Unknown(String),
}

/// Bounded exhaustive checker over a precomputed input space.
#[derive(Debug, Clone)]
pub struct BoundedChecker {
    pub bounds: Bounds,
    space: InputSpace,
}

impl BoundedChecker {
    pub fn new(prog: &TypedProgram, bounds: Bounds) -> Self {
        let space = InputSpace::new(prog, &bounds);
        BoundedChecker { bounds, space }
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }

    pub fn validate(&self, prog: &TypedProgram, cand: &Candidate) -> Result<Validation, VerifyError> {
        validate_in(prog, cand, &self.space)
    }
}

impl ProverBackend for BoundedChecker {
    fn name(&self) -> &str {
        "bounded"
    }

    fn decide(&self, prog: &TypedProgram, cand: &Candidate, vc: VerificationCondition) -> Result<Decision, VerifyError> {
        Ok(match check(prog, cand, vc, &self.space)?.verdict {
            Verdict::Valid => Decision::Valid,
            Verdict::Counterexample(c) => Decision::Counterexample(c),
        })
    }
}

/// Program fragments around the (at most two) loops.
struct Shape {
    outer: LoopId,
    top_pre: Vec<TStmt>,
    top_post: Vec<TStmt>,
    outer_body: Vec<TStmt>,
    inner: Option<InnerShape>,
}

struct InnerShape {
    id: LoopId,
    pre: Vec<TStmt>,
    body: Vec<TStmt>,
    post: Vec<TStmt>,
}

fn split_at_loop(stmts: &[TStmt]) -> Result<Option<(Vec<TStmt>, LoopId, Vec<TStmt>, Vec<TStmt>)>, VerifyError> {
    let loops: Vec<usize> = stmts.iter().enumerate().filter(|(_, s)| matches!(s, TStmt::For { .. })).map(|(n, _)| n).collect();
    match loops.as_slice() {
        [] => Ok(None),
        [n] => {
            let TStmt::For { id, body } = &stmts[*n] else { unreachable!() };
            Ok(Some((stmts[..*n].to_vec(), *id, body.clone(), stmts[n + 1..].to_vec())))
        }
        _ => Err(VerifyError::UnsupportedShape("more than one loop in a block".into())),
    }
}

fn shape(prog: &TypedProgram) -> Result<Shape, VerifyError> {
    let (top_pre, outer, outer_body, top_post) =
        split_at_loop(&prog.body)?.ok_or_else(|| VerifyError::UnsupportedShape("program has no loop".into()))?;
    let inner = match split_at_loop(&outer_body)? {
        None => None,
        Some((pre, id, body, post)) => {
            if split_at_loop(&body)?.is_some() {
                return Err(VerifyError::UnsupportedShape("loops nested more than two deep".into()));
            }
            if prog.loops[id].relation == prog.loops[outer].relation {
                return Err(VerifyError::UnsupportedShape("inner and outer loop traverse the same relation".into()));
            }
            Some(InnerShape { id, pre, body, post })
        }
    };
    Ok(Shape { outer, top_pre, top_post, outer_body, inner })
}

/// Local variables assigned or appended to anywhere in `stmts`.
pub fn modified_vars(stmts: &[TStmt]) -> BTreeSet<VarId> {
    fn walk(stmts: &[TStmt], out: &mut BTreeSet<VarId>) {
        for s in stmts {
            match s {
                TStmt::Assign { target, .. } | TStmt::Append { target, .. } => {
                    out.insert(*target);
                }
                TStmt::If { then_branch, else_branch, .. } => {
                    walk(then_branch, out);
                    walk(else_branch, out);
                }
                TStmt::For { body, .. } => walk(body, out),
                TStmt::Break => {}
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(stmts, &mut out);
    out
}

fn sort_fits(sort: &Sort, ty: &Ty) -> bool {
    match (sort, ty) {
        (Sort::Rel(s), Ty::List(l)) => s.cols.len() == l.len() && s.cols.iter().zip(l.types()).all(|(c, t)| c.ty == t),
        (Sort::Int, Ty::Int) | (Sort::Int, Ty::OptInt) | (Sort::OptInt, Ty::OptInt) => true,
        _ => false,
    }
}

fn sort_ctx(prog: &TypedProgram, indices: &[&str]) -> SortCtx {
    let mut ctx = SortCtx::default();
    for p in prog.params() {
        match &p.ty {
            Ty::Rel(s) => {
                ctx.relations.insert(p.name.clone(), s.clone());
            }
            Ty::Int => {
                ctx.scalars.insert(p.name.clone(), ScalarType::Int);
            }
            Ty::Text => {
                ctx.scalars.insert(p.name.clone(), ScalarType::Text);
            }
            _ => {}
        }
    }
    for i in indices {
        ctx.scalars.insert(i.to_string(), ScalarType::Int);
    }
    ctx
}

/// Checked context for one (program, candidate) pair.
struct Prepared<'a> {
    prog: &'a TypedProgram,
    cand: &'a Candidate,
    shape: Shape,
    /// Slots of the variables defined by each loop's invariant, aligned
    /// with the candidate's definitions.
    def_slots: Vec<Vec<VarId>>,
    def_plans: Vec<Vec<Plan>>,
    post_plan: Plan,
    vcs: Vec<VerificationCondition>,
}

fn prepare<'a>(prog: &'a TypedProgram, cand: &'a Candidate) -> Result<Prepared<'a>, VerifyError> {
    let nc = |m: String| VerifyError::NonCheckable(m);
    let shape = shape(prog)?;
    let mut loops = vec![shape.outer];
    if let Some(inner) = &shape.inner {
        loops.push(inner.id);
    }
    if cand.invariants.len() != loops.len() {
        return Err(nc(format!("expected {} loop invariants, found {}", loops.len(), cand.invariants.len())));
    }
    let mut def_slots = Vec::new();
    let mut def_plans = Vec::new();
    let mut vcs = Vec::new();
    let resolve = |n: &str| {
        prog.var_named(n)
            .filter(|&s| s < prog.num_params)
            .or_else(|| prog.loop_by_index_name(n).map(|l| l.index))
    };
    let mut scope: Vec<&str> = Vec::new();
    for (n, &id) in loops.iter().enumerate() {
        let info = &prog.loops[id];
        let inv = cand.invariant(id).ok_or_else(|| nc(format!("no invariant for loop L{id}")))?;
        if inv.index != info.index_name || inv.relation != info.relation_name {
            return Err(nc(format!("invariant of L{id} is not bound to `{}` over `{}`", info.index_name, info.relation_name)));
        }
        scope.push(&info.index_name);
        let ctx = sort_ctx(prog, &scope);
        let body = if n == 0 { &shape.outer_body } else { &shape.inner.as_ref().unwrap().body };
        let live = modified_vars(body);
        let mut slots = Vec::new();
        let mut plans = Vec::new();
        for (v, e) in &inv.defs {
            let slot = prog.var_named(v).filter(|s| live.contains(s)).ok_or_else(|| {
                nc(format!("`{v}` is not modified by loop L{id}"))
            })?;
            if slots.contains(&slot) {
                return Err(nc(format!("`{v}` defined twice at loop L{id}")));
            }
            let sort = ctx.sort(e).map_err(|err| nc(format!("definition of `{v}` at L{id}: {err}")))?;
            if !sort_fits(&sort, &prog.vars[slot].ty) {
                return Err(nc(format!("definition of `{v}` at L{id} does not have type {}", prog.vars[slot].ty)));
            }
            slots.push(slot);
            plans.push(Plan::compile(e, &ctx, &resolve).map_err(|err| nc(format!("definition of `{v}`: {err}")))?);
        }
        if let Some(missing) = live.iter().find(|s| !slots.contains(s)) {
            return Err(nc(format!("no defining equality for `{}` at loop L{id}", prog.vars[*missing].name)));
        }
        def_slots.push(slots);
        def_plans.push(plans);
        for kind in [VcKind::Initiation, VcKind::Preservation, VcKind::BreakExit, VcKind::Exit] {
            if kind != VcKind::BreakExit || info.has_break {
                vcs.push(VerificationCondition { loop_id: id, kind });
            }
        }
    }
    let result = &prog.vars[prog.result];
    if cand.result != result.name {
        return Err(nc(format!("postcondition constrains `{}`, not the result `{}`", cand.result, result.name)));
    }
    let ctx = sort_ctx(prog, &[]);
    let sort = ctx.sort(&cand.post).map_err(|e| nc(format!("postcondition: {e}")))?;
    if !sort_fits(&sort, &result.ty) {
        return Err(nc(format!("postcondition does not have type {}", result.ty)));
    }
    let post_plan = Plan::compile(&cand.post, &ctx, &resolve).map_err(|e| nc(format!("postcondition: {e}")))?;
    Ok(Prepared { prog, cand, shape, def_slots, def_plans, post_plan, vcs })
}

/// Verification conditions of a candidate, in checking order.
pub fn gen_vcs(prog: &TypedProgram, cand: &Candidate) -> Result<Vec<VerificationCondition>, VerifyError> {
    prepare(prog, cand).map(|p| p.vcs)
}

/// Per-input evaluation context.
struct Input {
    bindings: Bindings,
    base: Env,
}

impl Input {
    fn new(prog: &TypedProgram, bindings: Bindings) -> Result<Input, String> {
        let base = initial_env(prog, &bindings).map_err(|e| e.to_string())?;
        Ok(Input { bindings, base })
    }

    fn size(&self, prog: &TypedProgram, id: LoopId) -> i64 {
        self.base.get(prog.loops[id].relation).as_rel().map_or(0, |r| r.len() as i64)
    }
}

fn to_program(v: PlanValue<'_>, ty: &Ty) -> Option<Value> {
    match (v, ty) {
        (PlanValue::Rows(rows), Ty::List(s)) => {
            Some(Value::Rel(OrderedRelation { schema: s.clone(), rows: rows.into_owned() }))
        }
        (PlanValue::Int(x), Ty::Int) => Some(Value::Int(x)),
        (PlanValue::Int(x), Ty::OptInt) => Some(Value::OptInt(Some(x))),
        (PlanValue::OptInt(x), Ty::OptInt) => Some(Value::OptInt(x)),
        _ => None,
    }
}

impl Prepared<'_> {
    fn eval_as(&self, plan: &Plan, env: &Env, slot: VarId) -> Result<Value, String> {
        let v = plan.eval(&env.slots).map_err(|err| err.to_string())?;
        let ty = &self.prog.vars[slot].ty;
        to_program(v, ty).ok_or_else(|| format!("value does not have type {ty}"))
    }

    fn loop_pos(&self, id: LoopId) -> usize {
        if id == self.shape.outer {
            0
        } else {
            1
        }
    }

    fn set_index(&self, id: LoopId, v: i64, env: &mut Env) {
        env.slots[self.prog.loops[id].index] = Value::Int(v);
    }

    /// Replaces the live variables with the invariant's definitions, all
    /// evaluated in the current state.
    fn override_defs(&self, id: LoopId, env: &mut Env) -> Result<(), String> {
        let pos = self.loop_pos(id);
        let vals = self.def_plans[pos]
            .iter()
            .zip(&self.def_slots[pos])
            .map(|(p, &slot)| self.eval_as(p, env, slot))
            .collect::<Result<Vec<_>, _>>()?;
        for (v, &slot) in vals.into_iter().zip(&self.def_slots[pos]) {
            env.slots[slot] = v;
        }
        Ok(())
    }

    fn holds(&self, id: LoopId, env: &Env) -> Result<(), String> {
        let pos = self.loop_pos(id);
        let inv = self.cand.invariant(id).unwrap();
        for (((v, _), plan), &slot) in inv.defs.iter().zip(&self.def_plans[pos]).zip(&self.def_slots[pos]) {
            let want = plan.eval(&env.slots).map_err(|err| err.to_string())?;
            if !want.matches(env.get(slot)) {
                let want = self.eval_as(plan, env, slot)?;
                return Err(format!("`{v}` is {} but the invariant of L{id} requires {want}", env.get(slot)));
            }
        }
        Ok(())
    }

    fn post_holds(&self, env: &Env) -> Result<(), String> {
        let want = self.post_plan.eval(&env.slots).map_err(|err| err.to_string())?;
        let got = env.get(self.prog.result);
        if want.matches(got) {
            Ok(())
        } else {
            let want = self.eval_as(&self.post_plan, env, self.prog.result)?;
            Err(format!("result is {got} but the postcondition requires {want}"))
        }
    }

    /// Loop-head state of the outer loop at index `i`, memoised per input.
    fn outer_state(&self, input: &Input, cache: &mut StateCache, i: i64) -> Result<Env, String> {
        if let Some(hit) = cache.get(i) {
            return hit.clone();
        }
        let mut env = input.base.clone();
        exec(self.prog, &self.shape.top_pre, &mut env);
        self.set_index(self.shape.outer, i, &mut env);
        let state = self.override_defs(self.shape.outer, &mut env).map(|_| env);
        cache.put(i, state.clone());
        state
    }

    fn inner_state(&self, input: &Input, cache: &mut StateCache, i: i64, j: i64) -> Result<Env, String> {
        let inner = self.shape.inner.as_ref().unwrap();
        let mut env = self.outer_state(input, cache, i)?;
        exec(self.prog, &inner.pre, &mut env);
        self.set_index(inner.id, j, &mut env);
        self.override_defs(inner.id, &mut env)?;
        Ok(env)
    }

    /// After the outer body with index `i` completed (normally or by break).
    fn after_outer_body(&self, mut env: Env, flow: Flow, i: i64) -> Result<(), String> {
        if flow == Flow::Break {
            exec(self.prog, &self.shape.top_post, &mut env);
            self.post_holds(&env)
        } else {
            self.set_index(self.shape.outer, i + 1, &mut env);
            self.holds(self.shape.outer, &env)
        }
    }

    /// Checks one instance. `idx` holds the outer index and, for inner-loop
    /// conditions, the inner index.
    fn instance(&self, vc: VerificationCondition, input: &Input, cache: &mut StateCache, idx: &[i64]) -> Result<(), String> {
        let outer = self.shape.outer;
        if vc.loop_id == outer {
            let i = idx[0];
            match vc.kind {
                VcKind::Initiation => {
                    let mut env = input.base.clone();
                    exec(self.prog, &self.shape.top_pre, &mut env);
                    self.set_index(outer, 0, &mut env);
                    self.holds(outer, &env)
                }
                VcKind::Preservation | VcKind::BreakExit => {
                    let mut env = self.outer_state(input, cache, i)?;
                    let flow = exec(self.prog, &self.shape.outer_body, &mut env);
                    match (vc.kind, flow) {
                        (VcKind::Preservation, Flow::Normal) | (VcKind::BreakExit, Flow::Break) => {
                            self.after_outer_body(env, flow, i)
                        }
                        _ => Ok(()),
                    }
                }
                VcKind::Exit => {
                    let mut env = self.outer_state(input, cache, i)?;
                    exec(self.prog, &self.shape.top_post, &mut env);
                    self.post_holds(&env)
                }
            }
        } else {
            let inner = self.shape.inner.as_ref().unwrap();
            let (i, j) = (idx[0], idx[1]);
            match vc.kind {
                VcKind::Initiation => {
                    let mut env = self.outer_state(input, cache, i)?;
                    exec(self.prog, &inner.pre, &mut env);
                    self.set_index(inner.id, 0, &mut env);
                    self.holds(inner.id, &env)
                }
                VcKind::Preservation => {
                    let mut env = self.inner_state(input, cache, i, j)?;
                    if exec(self.prog, &inner.body, &mut env) == Flow::Break {
                        return Ok(());
                    }
                    self.set_index(inner.id, j + 1, &mut env);
                    self.holds(inner.id, &env)
                }
                VcKind::BreakExit | VcKind::Exit => {
                    let mut env = self.inner_state(input, cache, i, j)?;
                    if vc.kind == VcKind::BreakExit && exec(self.prog, &inner.body, &mut env) == Flow::Normal {
                        return Ok(());
                    }
                    let flow = exec(self.prog, &inner.post, &mut env);
                    self.after_outer_body(env, flow, i)
                }
            }
        }
    }

    /// Index assignments for `vc` on `input`, in ascending order.
    fn assignments(&self, vc: VerificationCondition, input: &Input) -> Vec<Vec<i64>> {
        let n = input.size(self.prog, self.shape.outer);
        if vc.loop_id == self.shape.outer {
            return match vc.kind {
                VcKind::Initiation => vec![vec![0]],
                VcKind::Preservation | VcKind::BreakExit => (0..n).map(|i| vec![i]).collect(),
                VcKind::Exit => vec![vec![n]],
            };
        }
        let m = input.size(self.prog, vc.loop_id);
        (0..n)
            .flat_map(|i| match vc.kind {
                VcKind::Initiation => vec![vec![i, 0]],
                VcKind::Preservation | VcKind::BreakExit => (0..m).map(|j| vec![i, j]).collect(),
                VcKind::Exit => vec![vec![i, m]],
            })
            .collect()
    }

    fn index_names(&self, vc: VerificationCondition) -> Vec<String> {
        let mut names = vec![self.prog.loops[self.shape.outer].index_name.clone()];
        if vc.loop_id != self.shape.outer {
            names.push(self.prog.loops[vc.loop_id].index_name.clone());
        }
        names
    }

    /// Checks `vcs` over the space with inputs as the outer iteration.
    /// Returns the first counterexample of the earliest failing condition
    /// together with its position: once condition `k` fails, only
    /// conditions before `k` are examined further.
    fn run(&self, vcs: &[VerificationCondition], space: &InputSpace) -> (Option<(usize, Counterexample)>, u64) {
        let mut instances = 0u64;
        let mut cache = StateCache::default();
        let mut limit = vcs.len();
        let mut found = None;
        for bindings in space.iter() {
            if limit == 0 {
                break;
            }
            let input = match Input::new(self.prog, bindings) {
                Ok(i) => i,
                Err(e) => unreachable!("bounded inputs always bind: {e}"),
            };
            cache.reset(input.size(self.prog, self.shape.outer));
            'vcs: for (k, &vc) in vcs[..limit].iter().enumerate() {
                for idx in self.assignments(vc, &input) {
                    instances += 1;
                    if let Err(detail) = self.instance(vc, &input, &mut cache, &idx) {
                        let indices = self.index_names(vc).into_iter().zip(idx).collect();
                        found = Some((k, Counterexample { vc, inputs: input.bindings.clone(), indices, detail }));
                        limit = k;
                        break 'vcs;
                    }
                }
            }
        }
        (found, instances)
    }

    fn check(&self, vc: VerificationCondition, space: &InputSpace) -> CheckOutcome {
        let (cex, instances) = self.run(&[vc], space);
        let verdict = cex.map_or(Verdict::Valid, |(_, c)| Verdict::Counterexample(Box::new(c)));
        CheckOutcome { verdict, instances }
    }
}

/// Memoised outer loop-head states for the current input.
#[derive(Default)]
struct StateCache {
    states: Vec<Option<Result<Env, String>>>,
}

impl StateCache {
    fn reset(&mut self, n: i64) {
        self.states.clear();
        self.states.resize(n as usize + 1, None);
    }

    fn get(&self, i: i64) -> Option<&Result<Env, String>> {
        self.states.get(i as usize).and_then(Option::as_ref)
    }

    fn put(&mut self, i: i64, s: Result<Env, String>) {
        if let Some(slot) = self.states.get_mut(i as usize) {
            *slot = Some(s);
        }
    }
}

/// Decides one condition over every instance in `space`.
pub fn check(
    prog: &TypedProgram,
    cand: &Candidate,
    vc: VerificationCondition,
    space: &InputSpace,
) -> Result<CheckOutcome, VerifyError> {
    let p = prepare(prog, cand)?;
    if !p.vcs.contains(&vc) {
        return Err(VerifyError::NonCheckable(format!("{vc} is not a condition of this candidate")));
    }
    Ok(p.check(vc, space))
}

/// Checks every condition of the candidate. On failure the verdict holds
/// the first counterexample of the earliest failing condition in
/// [`gen_vcs`] order.
pub fn validate_in(prog: &TypedProgram, cand: &Candidate, space: &InputSpace) -> Result<Validation, VerifyError> {
    let p = prepare(prog, cand)?;
    let (cex, instances) = p.run(&p.vcs, space);
    Ok(match cex {
        None => Validation { verdict: Verdict::Valid, vcs_checked: p.vcs.len() as u64, instances },
        Some((k, c)) => Validation { verdict: Verdict::Counterexample(Box::new(c)), vcs_checked: k as u64 + 1, instances },
    })
}

pub fn validate(prog: &TypedProgram, cand: &Candidate, b: &Bounds) -> Result<Verdict, VerifyError> {
    validate_in(prog, cand, &InputSpace::new(prog, b)).map(|v| v.verdict)
}

/// Re-checks the single instance described by a counterexample. Returns
/// `Ok(true)` when the violation is reproduced.
pub fn replay(prog: &TypedProgram, cand: &Candidate, cex: &Counterexample) -> Result<bool, VerifyError> {
    let p = prepare(prog, cand)?;
    if !p.vcs.contains(&cex.vc) {
        return Err(VerifyError::NonCheckable(format!("{} is not a condition of this candidate", cex.vc)));
    }
    let input = Input::new(prog, cex.inputs.clone()).map_err(VerifyError::NonCheckable)?;
    let idx: Vec<i64> = cex.indices.iter().map(|(_, v)| *v).collect();
    if !p.assignments(cex.vc, &input).contains(&idx) {
        return Ok(false);
    }
    let mut cache = StateCache::default();
    Ok(p.instance(cex.vc, &input, &mut cache, &idx).is_err())
}

/// Number of instances a condition ranges over, computed from the shape of
/// the input space rather than by enumeration.
pub fn analytic_instances(prog: &TypedProgram, vc: VerificationCondition, space: &InputSpace) -> u64 {
    let outer = prog.top_level_loops().next().expect("program has a loop");
    let r = outer.relation_name.as_str();
    if vc.loop_id == outer.id {
        return match vc.kind {
            VcKind::Initiation | VcKind::Exit => space.len(),
            VcKind::Preservation | VcKind::BreakExit => space.weighted_len(&[r]),
        };
    }
    let s = prog.loops[vc.loop_id].relation_name.as_str();
    match vc.kind {
        VcKind::Initiation | VcKind::Exit => space.weighted_len(&[r]),
        VcKind::Preservation | VcKind::BreakExit => space.weighted_len(&[r, s]),
    }
}
