//! Pretty-printer producing source that re-parses to an equal AST.

use std::fmt::Write;

use super::ast::*;
use crate::types::Schema;

pub fn pretty(ast: &KernelAst) -> String {
    let mut out = String::new();
    let params: Vec<String> = ast
        .params
        .iter()
        .map(|p| {
            let ty = match &p.ty {
                ParamType::Rel(s) => format!("rel({})", fields(s)),
                ParamType::Int => "int".to_string(),
                ParamType::Text => "text".to_string(),
            };
            format!("{}: {ty}", p.name.name)
        })
        .collect();
    let _ = writeln!(out, "fn {}({}) {{", ast.name.name, params.join(", "));
    for d in &ast.decls {
        let ty = match &d.ty {
            VarType::List(s) => format!("list({})", fields(s)),
            VarType::Int => "int".to_string(),
            VarType::Text => "text".to_string(),
            VarType::OptInt => "int?".to_string(),
        };
        match &d.init {
            Some(e) => {
                let _ = writeln!(out, "    var {}: {ty} = {};", d.name.name, expr(e));
            }
            None => {
                let _ = writeln!(out, "    var {}: {ty};", d.name.name);
            }
        }
    }
    block_body(&mut out, &ast.body, 1);
    let _ = writeln!(out, "    return {};", ast.result.name);
    out.push_str("}\n");
    out
}

fn fields(s: &Schema) -> String {
    s.fields.iter().map(|f| format!("{}:{}", f.name, f.ty)).collect::<Vec<_>>().join(", ")
}

fn block_body(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        stmt(out, s, depth);
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "    ".repeat(depth);
    match s {
        Stmt::Assign { target, value } => {
            let _ = writeln!(out, "{pad}{} = {};", target.name, expr(value));
        }
        Stmt::Append { target, value } => {
            let _ = writeln!(out, "{pad}{}.append({});", target.name, expr(value));
        }
        Stmt::Break { .. } => {
            let _ = writeln!(out, "{pad}break;");
        }
        Stmt::If { cond, then_branch, else_branch, .. } => {
            let _ = writeln!(out, "{pad}if {} {{", expr(cond));
            block_body(out, then_branch, depth + 1);
            match else_branch {
                Some(els) => {
                    let _ = writeln!(out, "{pad}}} else {{");
                    block_body(out, els, depth + 1);
                    let _ = writeln!(out, "{pad}}}");
                }
                None => {
                    let _ = writeln!(out, "{pad}}}");
                }
            }
        }
        Stmt::For { index, relation, body, .. } => {
            let _ = writeln!(out, "{pad}for {} in 0..size({}) {{", index.name, relation.name);
            block_body(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

/// Renders an expression; nested binary and unary operands are always
/// parenthesised so precedence never has to be reconstructed.
pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Text(s) => {
            let escaped = s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n");
            format!("\"{escaped}\"")
        }
        ExprKind::None => "none".to_string(),
        ExprKind::Var(v) => v.clone(),
        ExprKind::Index { base, index } => format!("{}[{}]", operand(base), expr(index)),
        ExprKind::Field { base, name } => format!("{}.{name}", operand(base)),
        ExprKind::Unary(UnOp::Neg, inner) => format!("-({})", expr(inner)),
        ExprKind::Unary(UnOp::Not, inner) => format!("!{}", operand(inner)),
        ExprKind::Binary(op, a, b) => format!("{} {} {}", operand(a), op.symbol(), operand(b)),
        ExprKind::Call(f, a, b) => {
            let name = match f {
                Builtin::Min => "min",
                Builtin::Max => "max",
            };
            format!("{name}({}, {})", expr(a), expr(b))
        }
        ExprKind::Record(fields) => {
            let items: Vec<String> =
                fields.iter().map(|(n, v)| format!("{}: {}", n.name, expr(v))).collect();
            format!("{{{}}}", items.join(", "))
        }
    }
}

fn operand(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Binary(..) | ExprKind::Unary(..) => format!("({})", expr(e)),
        ExprKind::Int(v) if *v < 0 => format!("({v})"),
        _ => expr(e),
    }
}
