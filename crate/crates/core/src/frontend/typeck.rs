//! Type checking and lowering of a [`KernelAst`] into a [`TypedProgram`]:
//! every name resolved to a variable slot, every expression annotated with
//! its type, and every structural restriction of the kernel language
//! enforced.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::ast::*;
use crate::types::{ScalarType, Schema};

/// Name of the hidden ordinal column; reserved in every schema.
pub const ORDINAL_COLUMN: &str = "rid";

pub const MAX_LOOP_DEPTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("type error at {line}:{column}: {message}")]
pub struct TypeError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ty {
    Int,
    Text,
    Bool,
    OptInt,
    Record(Arc<Schema>),
    Rel(Arc<Schema>),
    List(Arc<Schema>),
}

impl Ty {
    pub fn scalar(t: ScalarType) -> Ty {
        match t {
            ScalarType::Int => Ty::Int,
            ScalarType::Text => Ty::Text,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => f.write_str("int"),
            Ty::Text => f.write_str("text"),
            Ty::Bool => f.write_str("bool"),
            Ty::OptInt => f.write_str("int?"),
            Ty::Record(s) => write!(f, "record({s})"),
            Ty::Rel(s) => write!(f, "rel({s})"),
            Ty::List(s) => write!(f, "list({s})"),
        }
    }
}

/// Index into the interpreter's flat variable store. Parameters come first,
/// then locals, then one slot per loop index.
pub type VarId = usize;
pub type LoopId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub ty: Ty,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Param,
    Local,
    Index(LoopId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopInfo {
    pub id: LoopId,
    pub index: VarId,
    pub index_name: String,
    /// Slot of the relation parameter being traversed.
    pub relation: VarId,
    pub relation_name: String,
    pub parent: Option<LoopId>,
    pub depth: usize,
    pub has_break: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Ty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TExprKind {
    Int(i64),
    Text(Arc<str>),
    None,
    Var(VarId),
    /// `R[i]`: the row of relation slot `rel` at the index held in slot `index`.
    Row { rel: VarId, index: VarId },
    /// `R[i].f`
    Field { rel: VarId, index: VarId, pos: usize },
    Neg(Box<TExpr>),
    Not(Box<TExpr>),
    Binary(BinOp, Box<TExpr>, Box<TExpr>),
    Call(Builtin, Box<TExpr>, Box<TExpr>),
    Record(Vec<TExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TStmt {
    Assign { target: VarId, value: TExpr },
    Append { target: VarId, value: TExpr },
    If { cond: TExpr, then_branch: Vec<TStmt>, else_branch: Vec<TStmt> },
    For { id: LoopId, body: Vec<TStmt> },
    Break,
}

/// A type-checked kernel program in slot-resolved form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedProgram {
    pub ast: KernelAst,
    pub name: String,
    pub vars: Vec<VarInfo>,
    pub num_params: usize,
    pub loops: Vec<LoopInfo>,
    /// Local initialisers, in declaration order, as `(slot, value)`.
    pub inits: Vec<(VarId, TExpr)>,
    pub body: Vec<TStmt>,
    pub result: VarId,
}

impl TypedProgram {
    pub fn params(&self) -> &[VarInfo] {
        &self.vars[..self.num_params]
    }

    pub fn var_named(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name && !matches!(v.kind, VarKind::Index(_)))
    }

    pub fn loop_by_index_name(&self, name: &str) -> Option<&LoopInfo> {
        self.loops.iter().find(|l| l.index_name == name)
    }

    pub fn top_level_loops(&self) -> impl Iterator<Item = &LoopInfo> {
        self.loops.iter().filter(|l| l.parent.is_none())
    }

    pub fn children(&self, id: LoopId) -> impl Iterator<Item = &LoopInfo> {
        self.loops.iter().filter(move |l| l.parent == Some(id))
    }

    pub fn schema_of(&self, slot: VarId) -> Option<&Arc<Schema>> {
        match &self.vars[slot].ty {
            Ty::Rel(s) | Ty::List(s) => Some(s),
            _ => None,
        }
    }

    /// The loop statement with the given id together with its body.
    pub fn loop_body(&self, id: LoopId) -> &[TStmt] {
        fn find(stmts: &[TStmt], id: LoopId) -> Option<&[TStmt]> {
            for s in stmts {
                match s {
                    TStmt::For { id: l, body } if *l == id => return Some(body),
                    TStmt::For { body, .. } => {
                        if let Some(b) = find(body, id) {
                            return Some(b);
                        }
                    }
                    TStmt::If { then_branch, else_branch, .. } => {
                        if let Some(b) = find(then_branch, id).or_else(|| find(else_branch, id)) {
                            return Some(b);
                        }
                    }
                    _ => {}
                }
            }
            None
        }
        find(&self.body, id).expect("loop id out of range")
    }
}

pub fn typecheck(ast: &KernelAst) -> Result<TypedProgram, Vec<TypeError>> {
    let cx = Checker { vars: Vec::new(), scope: HashMap::new(), loops: Vec::new(), errors: Vec::new() };
    cx.program(ast)
}

struct Checker {
    vars: Vec<VarInfo>,
    scope: HashMap<String, VarId>,
    loops: Vec<LoopInfo>,
    errors: Vec<TypeError>,
}

/// Lexical context while checking statements.
#[derive(Clone, Copy)]
struct Ctx<'a> {
    /// Enclosing loops, innermost last.
    loops: &'a [LoopId],
    /// Whether we are directly in a loop body (not inside an `if`).
    loop_body_level: bool,
}

impl Checker {
    fn err(&mut self, span: Span, message: impl Into<String>) {
        self.errors.push(TypeError { line: span.line, column: span.col, message: message.into() });
    }

    fn check_schema(&mut self, schema: &Schema, span: Span) {
        if schema.is_empty() {
            self.err(span, "schema must have at least one field");
        }
        if let Some(d) = schema.duplicate_field() {
            self.err(span, format!("duplicate field `{d}` in schema"));
        }
        if schema.position(ORDINAL_COLUMN).is_some() {
            self.err(span, format!("field name `{ORDINAL_COLUMN}` is reserved for the ordinal column"));
        }
    }

    fn declare(&mut self, name: &Ident, ty: Ty, kind: VarKind) -> VarId {
        if self.scope.contains_key(&name.name) {
            self.err(name.span, format!("`{}` is already declared (no shadowing)", name.name));
        }
        let id = self.vars.len();
        self.vars.push(VarInfo { name: name.name.clone(), ty, kind });
        self.scope.insert(name.name.clone(), id);
        id
    }

    fn program(mut self, ast: &KernelAst) -> Result<TypedProgram, Vec<TypeError>> {
        for p in &ast.params {
            let ty = match &p.ty {
                ParamType::Rel(s) => {
                    self.check_schema(s, p.name.span);
                    Ty::Rel(Arc::new(s.clone()))
                }
                ParamType::Int => Ty::Int,
                ParamType::Text => Ty::Text,
            };
            self.declare(&p.name, ty, VarKind::Param);
        }
        let num_params = self.vars.len();
        let mut inits = Vec::new();
        for d in &ast.decls {
            let ty = match &d.ty {
                VarType::List(s) => {
                    self.check_schema(s, d.name.span);
                    Ty::List(Arc::new(s.clone()))
                }
                VarType::Int => Ty::Int,
                VarType::Text => Ty::Text,
                VarType::OptInt => Ty::OptInt,
            };
            // Initialisers see only earlier declarations.
            let init = match (&ty, &d.init) {
                (Ty::List(_), Some(e)) => {
                    self.err(e.span, "list variables start empty and take no initialiser");
                    None
                }
                (Ty::List(_), None) => None,
                (Ty::OptInt, None) => Some(TExpr { kind: TExprKind::None, ty: Ty::OptInt }),
                (_, None) => {
                    self.err(d.name.span, format!("scalar `{}` needs an initialiser", d.name.name));
                    None
                }
                (_, Some(e)) => {
                    let ctx = Ctx { loops: &[], loop_body_level: false };
                    self.expr(e, ctx).map(|te| {
                        if !assignable(&ty, &te.ty) {
                            self.err(e.span, format!("type mismatch: cannot initialise {ty} with {}", te.ty));
                        }
                        te
                    })
                }
            };
            let id = self.declare(&d.name, ty, VarKind::Local);
            if let Some(init) = init {
                inits.push((id, init));
            }
        }
        let body = self.block(&ast.body, Ctx { loops: &[], loop_body_level: false });
        let result = match self.scope.get(&ast.result.name) {
            Some(&id) if self.vars[id].kind == VarKind::Local => id,
            Some(_) => {
                self.err(ast.result.span, "only local variables can be returned");
                0
            }
            None => {
                self.err(ast.result.span, format!("undeclared identifier `{}`", ast.result.name));
                0
            }
        };
        if !self.errors.is_empty() {
            return Err(self.errors);
        }
        let prog = TypedProgram {
            ast: ast.clone(),
            name: ast.name.name.clone(),
            vars: self.vars,
            num_params,
            loops: self.loops,
            inits,
            body,
            result,
        };
        debug_assert_eq!(check_invariants(&prog), Vec::<String>::new());
        Ok(prog)
    }

    fn block(&mut self, stmts: &[Stmt], ctx: Ctx<'_>) -> Vec<TStmt> {
        let mut out = Vec::new();
        for (n, s) in stmts.iter().enumerate() {
            let is_tail = n + 1 == stmts.len();
            if let Some(t) = self.stmt(s, ctx, is_tail) {
                out.push(t);
            }
        }
        out
    }

    fn stmt(&mut self, s: &Stmt, ctx: Ctx<'_>, is_tail: bool) -> Option<TStmt> {
        match s {
            Stmt::Assign { target, value } => {
                let slot = self.lookup(target)?;
                let info = self.vars[slot].clone();
                let v = self.expr(value, ctx)?;
                match info.kind {
                    VarKind::Local if !matches!(info.ty, Ty::List(_)) => {}
                    VarKind::Local => {
                        self.err(target.span, format!("list `{}` can only be appended to", info.name));
                        return None;
                    }
                    VarKind::Param => {
                        self.err(target.span, format!("parameter `{}` is read-only", info.name));
                        return None;
                    }
                    VarKind::Index(_) => {
                        self.err(target.span, format!("loop index `{}` is read-only", info.name));
                        return None;
                    }
                }
                if !assignable(&info.ty, &v.ty) {
                    self.err(value.span, format!("type mismatch: cannot assign {} to {}", v.ty, info.ty));
                    return None;
                }
                Some(TStmt::Assign { target: slot, value: v })
            }
            Stmt::Append { target, value } => {
                let slot = self.lookup(target)?;
                let v = self.expr(value, ctx)?;
                let Ty::List(schema) = self.vars[slot].ty.clone() else {
                    self.err(target.span, format!("`{}` is not a list", target.name));
                    return None;
                };
                match &v.ty {
                    Ty::Record(rs) if **rs == *schema => Some(TStmt::Append { target: slot, value: v }),
                    other => {
                        self.err(
                            value.span,
                            format!("type mismatch: cannot append {other} to list({schema})"),
                        );
                        None
                    }
                }
            }
            Stmt::Break { span } => {
                self.err(*span, "break not in guarded tail position");
                None
            }
            Stmt::If { cond, then_branch, else_branch, span } => {
                if let [Stmt::Break { .. }] = then_branch.as_slice() {
                    if !(ctx.loop_body_level && is_tail && else_branch.is_none()) {
                        self.err(*span, "break not in guarded tail position");
                        return None;
                    }
                    let c = self.condition(cond, ctx)?;
                    let lp = *ctx.loops.last().expect("loop body level implies a loop");
                    self.loops[lp].has_break = true;
                    return Some(TStmt::If { cond: c, then_branch: vec![TStmt::Break], else_branch: vec![] });
                }
                let c = self.condition(cond, ctx);
                let inner = Ctx { loops: ctx.loops, loop_body_level: false };
                let t = self.block(then_branch, inner);
                let e = else_branch.as_ref().map(|b| self.block(b, inner)).unwrap_or_default();
                Some(TStmt::If { cond: c?, then_branch: t, else_branch: e })
            }
            Stmt::For { index, relation, body, span } => {
                if ctx.loops.len() >= MAX_LOOP_DEPTH {
                    self.err(*span, "nesting depth exceeded (at most 2 nested loops)");
                    return None;
                }
                if !ctx.loops.is_empty() && !ctx.loop_body_level {
                    self.err(*span, "illegal loop shape: inner loops must sit directly in the outer loop body");
                    return None;
                }
                let rel = self.lookup(relation)?;
                if !matches!(self.vars[rel].ty, Ty::Rel(_)) || self.vars[rel].kind != VarKind::Param {
                    self.err(relation.span, format!("illegal loop shape: `{}` is not a relation parameter", relation.name));
                    return None;
                }
                if self.scope.contains_key(&index.name) {
                    self.err(index.span, format!("`{}` is already declared (no shadowing)", index.name));
                    return None;
                }
                let id = self.loops.len();
                let slot = self.vars.len();
                self.vars.push(VarInfo { name: index.name.clone(), ty: Ty::Int, kind: VarKind::Index(id) });
                self.scope.insert(index.name.clone(), slot);
                self.loops.push(LoopInfo {
                    id,
                    index: slot,
                    index_name: index.name.clone(),
                    relation: rel,
                    relation_name: relation.name.clone(),
                    parent: ctx.loops.last().copied(),
                    depth: ctx.loops.len() + 1,
                    has_break: false,
                });
                let mut nested: Vec<LoopId> = ctx.loops.to_vec();
                nested.push(id);
                let t = self.block(body, Ctx { loops: &nested, loop_body_level: true });
                // Index goes out of scope; sibling loops may reuse the name.
                self.scope.remove(&index.name);
                if t.iter().filter(|s| matches!(s, TStmt::For { .. })).count() > 1 {
                    self.err(*span, "illegal loop shape: at most one inner loop per loop body");
                }
                Some(TStmt::For { id, body: t })
            }
        }
    }

    fn lookup(&mut self, id: &Ident) -> Option<VarId> {
        match self.scope.get(&id.name) {
            Some(&v) => Some(v),
            None => {
                self.err(id.span, format!("undeclared identifier `{}`", id.name));
                None
            }
        }
    }

    fn condition(&mut self, e: &Expr, ctx: Ctx<'_>) -> Option<TExpr> {
        let c = self.expr(e, ctx)?;
        if c.ty != Ty::Bool {
            self.err(e.span, format!("type mismatch: condition has type {}", c.ty));
            return None;
        }
        Some(c)
    }

    fn expr(&mut self, e: &Expr, ctx: Ctx<'_>) -> Option<TExpr> {
        let mk = |kind, ty| Some(TExpr { kind, ty });
        match &e.kind {
            ExprKind::Int(v) => mk(TExprKind::Int(*v), Ty::Int),
            ExprKind::Text(s) => mk(TExprKind::Text(Arc::from(s.as_str())), Ty::Text),
            ExprKind::None => mk(TExprKind::None, Ty::OptInt),
            ExprKind::Var(name) => {
                let slot = self.lookup(&Ident::new(name.clone(), e.span))?;
                let ty = self.vars[slot].ty.clone();
                if matches!(ty, Ty::Rel(_) | Ty::List(_)) {
                    self.err(e.span, format!("`{name}` is a relation and cannot be used as a value here"));
                    return None;
                }
                mk(TExprKind::Var(slot), ty)
            }
            ExprKind::Index { base, index } => {
                let (rel, idx) = self.row_ref(base, index, e.span, ctx)?;
                let Ty::Rel(s) = self.vars[rel].ty.clone() else { unreachable!() };
                mk(TExprKind::Row { rel, index: idx }, Ty::Record(s))
            }
            ExprKind::Field { base, name } => {
                let ExprKind::Index { base: b, index } = &base.kind else {
                    self.err(e.span, "field access is only supported on `R[i]`");
                    return None;
                };
                let (rel, idx) = self.row_ref(b, index, base.span, ctx)?;
                let Ty::Rel(s) = self.vars[rel].ty.clone() else { unreachable!() };
                match s.position(name) {
                    Some(pos) => mk(TExprKind::Field { rel, index: idx, pos }, Ty::scalar(s.fields[pos].ty)),
                    None => {
                        self.err(e.span, format!("relation `{}` has no field `{name}`", self.vars[rel].name));
                        None
                    }
                }
            }
            ExprKind::Unary(op, inner) => {
                let t = self.expr(inner, ctx)?;
                let (want, kind) = match op {
                    UnOp::Neg => (Ty::Int, TExprKind::Neg(Box::new(t.clone()))),
                    UnOp::Not => (Ty::Bool, TExprKind::Not(Box::new(t.clone()))),
                };
                if t.ty != want {
                    self.err(e.span, format!("type mismatch: operand has type {}, expected {want}", t.ty));
                    return None;
                }
                mk(kind, want)
            }
            ExprKind::Binary(op, a, b) => {
                let (ta, tb) = (self.expr(a, ctx), self.expr(b, ctx));
                let (ta, tb) = (ta?, tb?);
                let ty = match op {
                    BinOp::Add | BinOp::Sub if ta.ty == Ty::Int && tb.ty == Ty::Int => Ty::Int,
                    BinOp::And | BinOp::Or if ta.ty == Ty::Bool && tb.ty == Ty::Bool => Ty::Bool,
                    BinOp::Eq | BinOp::Ne
                        if ta.ty == tb.ty && matches!(ta.ty, Ty::Int | Ty::Text) =>
                    {
                        Ty::Bool
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge if ta.ty == Ty::Int && tb.ty == Ty::Int => {
                        Ty::Bool
                    }
                    _ => {
                        self.err(
                            e.span,
                            format!("type mismatch: `{}` applied to {} and {}", op.symbol(), ta.ty, tb.ty),
                        );
                        return None;
                    }
                };
                mk(TExprKind::Binary(*op, Box::new(ta), Box::new(tb)), ty)
            }
            ExprKind::Call(f, a, b) => {
                let (ta, tb) = (self.expr(a, ctx), self.expr(b, ctx));
                let (ta, tb) = (ta?, tb?);
                let numeric = |t: &Ty| matches!(t, Ty::Int | Ty::OptInt);
                if !numeric(&ta.ty) || !numeric(&tb.ty) {
                    self.err(e.span, format!("type mismatch: min/max applied to {} and {}", ta.ty, tb.ty));
                    return None;
                }
                let ty = if ta.ty == Ty::OptInt || tb.ty == Ty::OptInt { Ty::OptInt } else { Ty::Int };
                mk(TExprKind::Call(*f, Box::new(ta), Box::new(tb)), ty)
            }
            ExprKind::Record(fields) => {
                let mut items = Vec::new();
                let mut schema = Vec::new();
                for (name, value) in fields {
                    let t = self.expr(value, ctx)?;
                    let st = match t.ty {
                        Ty::Int => ScalarType::Int,
                        Ty::Text => ScalarType::Text,
                        _ => {
                            self.err(value.span, format!("type mismatch: record field `{}` has type {}", name.name, t.ty));
                            return None;
                        }
                    };
                    schema.push(crate::types::Field::new(name.name.clone(), st));
                    items.push(t);
                }
                let schema = Schema::new(schema);
                if let Some(d) = schema.duplicate_field() {
                    self.err(e.span, format!("duplicate field `{d}` in record"));
                    return None;
                }
                mk(TExprKind::Record(items), Ty::Record(Arc::new(schema)))
            }
        }
    }

    /// Resolves `R[i]`, requiring `i` to be the index of an enclosing loop
    /// that traverses `R`, so indexing is always in bounds.
    fn row_ref(&mut self, base: &Expr, index: &Expr, span: Span, ctx: Ctx<'_>) -> Option<(VarId, VarId)> {
        let (ExprKind::Var(r), ExprKind::Var(i)) = (&base.kind, &index.kind) else {
            self.err(span, "illegal index: only `R[i]` with a loop index `i` over `R` is allowed");
            return None;
        };
        let rel = self.lookup(&Ident::new(r.clone(), base.span))?;
        let idx = self.lookup(&Ident::new(i.clone(), index.span))?;
        let ok = ctx.loops.iter().any(|&l| self.loops[l].index == idx && self.loops[l].relation == rel);
        if !ok {
            self.err(span, format!("illegal index: `{i}` is not the index of a loop over `{r}`"));
            return None;
        }
        Some((rel, idx))
    }
}

fn assignable(target: &Ty, value: &Ty) -> bool {
    target == value || (*target == Ty::OptInt && *value == Ty::Int)
}

/// Re-checks the structural invariants of an accepted program. Returns one
/// message per violation; empty for every program `typecheck` accepts.
pub fn check_invariants(p: &TypedProgram) -> Vec<String> {
    let mut v = Vec::new();
    for (i, a) in p.vars.iter().enumerate() {
        if a.kind == VarKind::Local || a.kind == VarKind::Param {
            if p.vars[..i].iter().any(|b| b.name == a.name) {
                v.push(format!("shadowed name {}", a.name));
            }
        }
        if let Ty::Rel(s) | Ty::List(s) = &a.ty {
            if s.is_empty() || s.duplicate_field().is_some() {
                v.push(format!("bad schema for {}", a.name));
            }
        }
    }
    for l in &p.loops {
        if l.depth > MAX_LOOP_DEPTH {
            v.push(format!("loop {} too deep", l.id));
        }
        if !matches!(p.vars[l.relation].ty, Ty::Rel(_)) {
            v.push(format!("loop {} does not traverse a relation", l.id));
        }
        let body = p.loop_body(l.id);
        for (n, s) in body.iter().enumerate() {
            if let TStmt::If { then_branch, .. } = s {
                if then_branch.contains(&TStmt::Break) && n + 1 != body.len() {
                    v.push(format!("loop {} has a break before its tail", l.id));
                }
            }
        }
    }
    fn walk(stmts: &[TStmt], p: &TypedProgram, v: &mut Vec<String>) {
        for s in stmts {
            match s {
                TStmt::Append { target, value } => {
                    let (Ty::List(ls), Ty::Record(rs)) = (&p.vars[*target].ty, &value.ty) else {
                        v.push("append to non-list".into());
                        continue;
                    };
                    if ls != rs {
                        v.push("append schema mismatch".into());
                    }
                }
                TStmt::If { cond, then_branch, else_branch } => {
                    if cond.ty != Ty::Bool {
                        v.push("non-boolean condition".into());
                    }
                    walk(then_branch, p, v);
                    walk(else_branch, p, v);
                }
                TStmt::For { body, .. } => walk(body, p, v),
                _ => {}
            }
        }
    }
    walk(&p.body, p, &mut v);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn check(src: &str) -> Result<TypedProgram, Vec<TypeError>> {
        typecheck(&parse(src).unwrap())
    }

    fn first_error(src: &str) -> String {
        check(src).unwrap_err()[0].message.clone()
    }

    #[test]
    fn selection_is_well_typed() {
        let p = check(
            "fn sel(R: rel(a:int)) { var out: list(a:int); for i in 0..size(R) { if R[i].a > 2 { out.append(R[i]); } } return out; }",
        )
        .unwrap();
        assert_eq!(p.loops.len(), 1);
        assert!(check_invariants(&p).is_empty());
    }

    #[test]
    fn int_vs_text_is_a_mismatch() {
        let msg = first_error(
            "fn f(R: rel(a:int)) { var out: list(a:int); for i in 0..size(R) { if R[i].a == \"x\" { out.append(R[i]); } } return out; }",
        );
        assert!(msg.contains("type mismatch"), "{msg}");
    }

    #[test]
    fn three_deep_nest_rejected() {
        let msg = first_error(
            "fn f(R: rel(a:int)) { var c: int = 0; for i in 0..size(R) { for j in 0..size(R) { for k in 0..size(R) { c = c + 1; } } } return c; }",
        );
        assert!(msg.contains("nesting depth exceeded"), "{msg}");
    }

    #[test]
    fn undeclared_identifier() {
        let msg = first_error("fn f() { var c: int = 0; c = d; return c; }");
        assert!(msg.contains("undeclared identifier"), "{msg}");
    }

    #[test]
    fn break_must_be_guarded_tail() {
        let untail = "fn f(R: rel(a:int)) { var c: int = 0; for i in 0..size(R) { if c > 1 { break; } c = c + 1; } return c; }";
        assert!(first_error(untail).contains("break not in guarded tail position"));
        let bare = "fn f(R: rel(a:int)) { var c: int = 0; for i in 0..size(R) { break; } return c; }";
        assert!(first_error(bare).contains("break not in guarded tail position"));
        let ok = "fn f(R: rel(a:int)) { var c: int = 0; for i in 0..size(R) { c = c + 1; if c > 1 { break; } } return c; }";
        let p = check(ok).unwrap();
        assert!(p.loops[0].has_break);
    }

    #[test]
    fn loop_over_non_relation() {
        let msg = first_error("fn f(k: int) { var c: int = 0; for i in 0..size(k) { c = c + 1; } return c; }");
        assert!(msg.contains("illegal loop shape"), "{msg}");
    }

    #[test]
    fn loop_inside_if_rejected() {
        let msg = first_error(
            "fn f(R: rel(a:int)) { var c: int = 0; for i in 0..size(R) { if R[i].a > 0 { for j in 0..size(R) { c = c + 1; } } } return c; }",
        );
        assert!(msg.contains("illegal loop shape"), "{msg}");
    }

    #[test]
    fn shadowing_rejected() {
        let msg = first_error("fn f(R: rel(a:int)) { var R: int = 0; return R; }");
        assert!(msg.contains("no shadowing"), "{msg}");
    }

    #[test]
    fn index_must_belong_to_relation() {
        let msg = first_error(
            "fn f(R: rel(a:int), S: rel(a:int)) { var out: list(a:int); for i in 0..size(R) { out.append(S[i]); } return out; }",
        );
        assert!(msg.contains("illegal index"), "{msg}");
    }

    #[test]
    fn append_schema_must_match() {
        let msg = first_error(
            "fn f(R: rel(a:int)) { var out: list(b:int); for i in 0..size(R) { out.append(R[i]); } return out; }",
        );
        assert!(msg.contains("type mismatch"), "{msg}");
    }

    #[test]
    fn reserved_ordinal_field() {
        let msg = first_error("fn f(R: rel(rid:int)) { var c: int = 0; return c; }");
        assert!(msg.contains("reserved"), "{msg}");
    }

    #[test]
    fn text_ordering_rejected() {
        let msg = first_error(
            "fn f(R: rel(t:text)) { var c: int = 0; for i in 0..size(R) { if R[i].t < \"b\" { c = c + 1; } } return c; }",
        );
        assert!(msg.contains("type mismatch"), "{msg}");
    }

    #[test]
    fn deterministic_errors() {
        let src = "fn f(R: rel(a:int)) { var c: int = \"x\"; c = q; for i in 0..size(k) { } return z; }";
        let a = check(src).unwrap_err();
        let b = check(src).unwrap_err();
        assert_eq!(a, b);
        assert!(a.len() >= 3);
    }
}
