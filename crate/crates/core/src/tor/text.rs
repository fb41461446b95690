//! Canonical s-expression text for TOR expressions and a reader for it.
//!
//! ```text
//! (top (sel (> (field R.a) 2) (query R)) k)
//! (agg sum R.a (query R))
//! (join (= (field R.id) (field S.owner)) (query R) (query S))
//! ```
//!
//! Printing then reading yields the original term, and the printed text is
//! used as a total order for tie-breaking during enumeration.

use std::fmt::Write as _;

use super::expr::*;
use super::TorError;
use crate::types::ScalarType;

/// A parsed s-expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            _ => None,
        }
    }

    /// The head symbol and arguments of a list form.
    pub fn form(&self) -> Option<(&str, &[Sexp])> {
        match self {
            Sexp::List(xs) => match xs.split_first() {
                Some((Sexp::Atom(h), rest)) => Some((h, rest)),
                _ => None,
            },
            _ => None,
        }
    }
}

fn syntax(msg: impl Into<String>) -> TorError {
    TorError::Syntax(msg.into())
}

/// Reads exactly one s-expression from `src`.
pub fn read_sexp(src: &str) -> Result<Sexp, TorError> {
    let mut r = Reader { s: src.as_bytes(), pos: 0, src };
    let v = r.sexp()?;
    r.skip_ws();
    if r.pos != r.s.len() {
        return Err(syntax(format!("trailing input at offset {}", r.pos)));
    }
    Ok(v)
}

struct Reader<'a> {
    s: &'a [u8],
    src: &'a str,
    pos: usize,
}

impl Reader<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn sexp(&mut self) -> Result<Sexp, TorError> {
        self.skip_ws();
        match self.s.get(self.pos) {
            None => Err(syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.s.get(self.pos) {
                        None => return Err(syntax("unclosed `(`")),
                        Some(b')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items));
                        }
                        Some(_) => items.push(self.sexp()?),
                    }
                }
            }
            Some(b')') => Err(syntax(format!("unexpected `)` at offset {}", self.pos))),
            Some(b'"') => {
                let start = self.pos;
                self.pos += 1;
                while self.pos < self.s.len() && self.s[self.pos] != b'"' {
                    if self.s[self.pos] == b'\\' {
                        self.pos += 1;
                    }
                    self.pos += 1;
                }
                if self.pos >= self.s.len() {
                    return Err(syntax("unterminated string"));
                }
                self.pos += 1;
                let lit = &self.src[start..self.pos];
                serde_json::from_str::<String>(lit).map(Sexp::Str).map_err(|e| syntax(format!("bad string {lit}: {e}")))
            }
            Some(_) => {
                let start = self.pos;
                while self.pos < self.s.len()
                    && !self.s[self.pos].is_ascii_whitespace()
                    && !matches!(self.s[self.pos], b'(' | b')' | b'"')
                {
                    self.pos += 1;
                }
                Ok(Sexp::Atom(self.src[start..self.pos].to_string()))
            }
        }
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn expr_text(e: &TorExpr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

pub fn pred_text(p: &Pred) -> String {
    let mut out = String::new();
    write_pred(&mut out, p);
    out
}

pub fn scalar_text(k: &ScalarExpr) -> String {
    let mut out = String::new();
    write_scalar(&mut out, k);
    out
}

fn write_expr(out: &mut String, e: &TorExpr) {
    let pair = |out: &mut String, head: &str, a: &TorExpr, b: &TorExpr| {
        let _ = write!(out, "({head} ");
        write_expr(out, a);
        out.push(' ');
        write_expr(out, b);
        out.push(')');
    };
    let indexed = |out: &mut String, head: &str, a: &TorExpr, k: &ScalarExpr| {
        let _ = write!(out, "({head} ");
        write_expr(out, a);
        out.push(' ');
        write_scalar(out, k);
        out.push(')');
    };
    match e {
        TorExpr::Query(r) => {
            let _ = write!(out, "(query {r})");
        }
        TorExpr::Empty(s) => {
            out.push_str("(empty");
            for c in &s.cols {
                let _ = write!(out, " ({} {})", c.col, c.ty);
            }
            out.push(')');
        }
        TorExpr::Sel(inner, p) => {
            out.push_str("(sel ");
            write_pred(out, p);
            out.push(' ');
            write_expr(out, inner);
            out.push(')');
        }
        TorExpr::Proj(inner, cols) => {
            out.push_str("(proj (");
            for (i, c) in cols.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{c}");
            }
            out.push_str(") ");
            write_expr(out, inner);
            out.push(')');
        }
        TorExpr::Join(l, r, p) => {
            out.push_str("(join ");
            write_pred(out, p);
            out.push(' ');
            write_expr(out, l);
            out.push(' ');
            write_expr(out, r);
            out.push(')');
        }
        TorExpr::Top(inner, k) => indexed(out, "top", inner, k),
        TorExpr::Get(inner, k) => indexed(out, "get", inner, k),
        TorExpr::Append(a, b) => pair(out, "append", a, b),
        TorExpr::Concat(a, b) => pair(out, "concat", a, b),
        TorExpr::Agg(kind, col, inner) => {
            let _ = write!(out, "(agg {}", kind.name());
            if let Some(c) = col {
                let _ = write!(out, " {c}");
            }
            out.push(' ');
            write_expr(out, inner);
            out.push(')');
        }
        TorExpr::Size(inner) => {
            out.push_str("(size ");
            write_expr(out, inner);
            out.push(')');
        }
    }
}

fn write_operand(out: &mut String, o: &Operand) {
    match o {
        Operand::Field(c) => {
            let _ = write!(out, "(field {c})");
        }
        Operand::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Operand::Text(t) => out.push_str(&quote(t)),
        Operand::Var(v) => out.push_str(v),
    }
}

fn write_pred(out: &mut String, p: &Pred) {
    match p {
        Pred::True => out.push_str("true"),
        Pred::Atom(op, a, b) => {
            let _ = write!(out, "({} ", op.symbol());
            write_operand(out, a);
            out.push(' ');
            write_operand(out, b);
            out.push(')');
        }
        Pred::And(ps) | Pred::Or(ps) => {
            out.push_str(if matches!(p, Pred::And(_)) { "(and" } else { "(or" });
            for q in ps {
                out.push(' ');
                write_pred(out, q);
            }
            out.push(')');
        }
        Pred::Not(q) => {
            out.push_str("(not ");
            write_pred(out, q);
            out.push(')');
        }
    }
}

fn write_scalar(out: &mut String, k: &ScalarExpr) {
    match k {
        ScalarExpr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ScalarExpr::Var(v) => out.push_str(v),
        ScalarExpr::Size(e) => {
            out.push_str("(size ");
            write_expr(out, e);
            out.push(')');
        }
        ScalarExpr::Add(a, b) | ScalarExpr::Sub(a, b) => {
            out.push_str(if matches!(k, ScalarExpr::Add(..)) { "(+ " } else { "(- " });
            write_scalar(out, a);
            out.push(' ');
            write_scalar(out, b);
            out.push(')');
        }
    }
}

impl std::fmt::Display for TorExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&expr_text(self))
    }
}

impl std::fmt::Display for Pred {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&pred_text(self))
    }
}

impl std::fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&scalar_text(self))
    }
}

pub fn parse_expr(src: &str) -> Result<TorExpr, TorError> {
    expr_from_sexp(&read_sexp(src)?)
}

pub fn parse_pred(src: &str) -> Result<Pred, TorError> {
    pred_from_sexp(&read_sexp(src)?)
}

pub fn parse_scalar(src: &str) -> Result<ScalarExpr, TorError> {
    scalar_from_sexp(&read_sexp(src)?)
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn col_ref(x: &Sexp) -> Result<ColRef, TorError> {
    let a = x.atom().ok_or_else(|| syntax("expected a column `R.a`"))?;
    match a.split_once('.') {
        Some((q, n)) if is_ident(q) && is_ident(n) => Ok(ColRef::new(q, n)),
        _ => Err(syntax(format!("malformed column `{a}`"))),
    }
}

fn int_atom(a: &str) -> Option<i64> {
    let digits = a.strip_prefix('-').unwrap_or(a);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        a.parse().ok()
    } else {
        None
    }
}

fn arity(head: &str, args: &[Sexp], n: usize) -> Result<(), TorError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(syntax(format!("`{head}` takes {n} arguments, got {}", args.len())))
    }
}

pub fn expr_from_sexp(x: &Sexp) -> Result<TorExpr, TorError> {
    let (head, args) = x.form().ok_or_else(|| syntax(format!("expected a relation form, got {x:?}")))?;
    let b = |i: usize| expr_from_sexp(&args[i]).map(Box::new);
    Ok(match head {
        "query" => {
            arity(head, args, 1)?;
            match args[0].atom() {
                Some(r) if is_ident(r) => TorExpr::Query(r.to_string()),
                _ => return Err(syntax("`query` takes a relation name")),
            }
        }
        "empty" => {
            let mut cols = Vec::new();
            for c in args {
                let (name, ty) = match c {
                    Sexp::List(p) if p.len() == 2 => (col_ref(&p[0])?, p[1].atom()),
                    _ => return Err(syntax("`empty` columns are `(R.a type)`")),
                };
                let ty = match ty {
                    Some("int") => ScalarType::Int,
                    Some("text") => ScalarType::Text,
                    _ => return Err(syntax("column type must be `int` or `text`")),
                };
                cols.push(Column { col: name, ty });
            }
            TorExpr::Empty(TorSchema { cols })
        }
        "sel" => {
            arity(head, args, 2)?;
            TorExpr::Sel(b(1)?, pred_from_sexp(&args[0])?)
        }
        "proj" => {
            arity(head, args, 2)?;
            let cols = match &args[0] {
                Sexp::List(cs) => cs.iter().map(col_ref).collect::<Result<Vec<_>, _>>()?,
                _ => return Err(syntax("`proj` takes a column list")),
            };
            TorExpr::Proj(b(1)?, cols)
        }
        "join" => {
            arity(head, args, 3)?;
            TorExpr::Join(b(1)?, b(2)?, pred_from_sexp(&args[0])?)
        }
        "top" | "get" => {
            arity(head, args, 2)?;
            let k = scalar_from_sexp(&args[1])?;
            if head == "top" {
                TorExpr::Top(b(0)?, k)
            } else {
                TorExpr::Get(b(0)?, k)
            }
        }
        "append" => {
            arity(head, args, 2)?;
            TorExpr::Append(b(0)?, b(1)?)
        }
        "concat" => {
            arity(head, args, 2)?;
            TorExpr::Concat(b(0)?, b(1)?)
        }
        "size" => {
            arity(head, args, 1)?;
            TorExpr::Size(b(0)?)
        }
        "agg" => {
            let kind = match args.first().and_then(Sexp::atom) {
                Some("sum") => AggKind::Sum,
                Some("count") => AggKind::Count,
                Some("min") => AggKind::Min,
                Some("max") => AggKind::Max,
                _ => return Err(syntax("unknown aggregate")),
            };
            if kind == AggKind::Count {
                arity("agg count", &args[1..], 1)?;
                TorExpr::Agg(kind, None, b(1)?)
            } else {
                arity("agg", &args[1..], 2)?;
                TorExpr::Agg(kind, Some(col_ref(&args[1])?), b(2)?)
            }
        }
        other => return Err(syntax(format!("unknown form `{other}`"))),
    })
}

fn operand_from_sexp(x: &Sexp) -> Result<Operand, TorError> {
    match x {
        Sexp::Str(s) => Ok(Operand::Text(s.clone())),
        Sexp::Atom(a) => match int_atom(a) {
            Some(v) => Ok(Operand::Int(v)),
            None if is_ident(a) => Ok(Operand::Var(a.clone())),
            None => Err(syntax(format!("bad operand `{a}`"))),
        },
        Sexp::List(_) => match x.form() {
            Some(("field", [c])) => Ok(Operand::Field(col_ref(c)?)),
            _ => Err(syntax("operand lists must be `(field R.a)`")),
        },
    }
}

pub fn pred_from_sexp(x: &Sexp) -> Result<Pred, TorError> {
    if x.atom() == Some("true") {
        return Ok(Pred::True);
    }
    let (head, args) = x.form().ok_or_else(|| syntax(format!("expected a predicate, got {x:?}")))?;
    match head {
        "and" | "or" => {
            let ps = args.iter().map(pred_from_sexp).collect::<Result<Vec<_>, _>>()?;
            Ok(if head == "and" { Pred::And(ps) } else { Pred::Or(ps) })
        }
        "not" => {
            arity(head, args, 1)?;
            Ok(Pred::Not(Box::new(pred_from_sexp(&args[0])?)))
        }
        sym => {
            let op = CmpOp::ALL
                .into_iter()
                .find(|o| o.symbol() == sym)
                .ok_or_else(|| syntax(format!("unknown predicate `{sym}`")))?;
            arity(head, args, 2)?;
            Ok(Pred::Atom(op, operand_from_sexp(&args[0])?, operand_from_sexp(&args[1])?))
        }
    }
}

pub fn scalar_from_sexp(x: &Sexp) -> Result<ScalarExpr, TorError> {
    match x {
        Sexp::Atom(a) => match int_atom(a) {
            Some(v) => Ok(ScalarExpr::Int(v)),
            None if is_ident(a) => Ok(ScalarExpr::Var(a.clone())),
            None => Err(syntax(format!("bad scalar `{a}`"))),
        },
        Sexp::Str(_) => Err(syntax("text is not a scalar count")),
        Sexp::List(_) => match x.form() {
            Some(("size", [e])) => Ok(ScalarExpr::Size(Box::new(expr_from_sexp(e)?))),
            Some(("+", [a, b])) => Ok(ScalarExpr::Add(Box::new(scalar_from_sexp(a)?), Box::new(scalar_from_sexp(b)?))),
            Some(("-", [a, b])) => Ok(ScalarExpr::Sub(Box::new(scalar_from_sexp(a)?), Box::new(scalar_from_sexp(b)?))),
            _ => Err(syntax("scalar forms are `size`, `+` and `-`")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_examples_round_trip() {
        for src in [
            "(top (sel (> (field R.a) 2) (query R)) k)",
            "(agg sum R.a (query R))",
            "(agg count (sel (!= (field R.b) \"x\\\"y\") (query R)))",
            "(join (= (field R.id) (field S.owner)) (query R) (query S))",
            "(proj (R.a S.c) (join true (query R) (query S)))",
            "(concat (empty (R.a int) (R.b text)) (append (query R) (get (query R) (- (size (query R)) 1))))",
            "(sel (or (not (< (field R.a) -3)) (and (= (field R.b) n) (>= (field R.a) 0))) (query R))",
            "(top (query R) (+ i 1))",
        ] {
            let e = parse_expr(src).unwrap();
            assert_eq!(expr_text(&e), src);
        }
    }

    #[test]
    fn rejects_malformed_text() {
        for src in ["(query)", "(sel (query R))", "(proj R.a (query R))", "(top (query R)", "(agg avg R.a (query R))", "(query R) x"] {
            assert!(parse_expr(src).is_err(), "{src}");
        }
    }
}
