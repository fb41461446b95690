//! Hand-written lexer and recursive-descent parser for `.qil` sources.
//! The grammar is documented in `docs/grammar.md`.

use thiserror::Error;

use super::ast::*;
use crate::types::{Field, ScalarType, Schema};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {line}:{column}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Punct(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "fn", "var", "for", "in", "if", "else", "break", "return", "rel", "list", "int", "text",
    "size", "min", "max", "none",
];

// Longest first so that `..` wins over `.` and `==` over `=`.
const PUNCT: &[&str] = &[
    "..", "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]", ",", ";", ":", ".",
    "=", "<", ">", "+", "-", "!", "?",
];

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let err = |line, column, message: String| ParseError { line, column, message };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            out.push((Tok::Ident(word), span));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            col += (i - start) as u32;
            let v = digits
                .parse::<i64>()
                .map_err(|_| err(span.line, span.col, format!("integer literal `{digits}` out of range")))?;
            out.push((Tok::Int(v), span));
            continue;
        }
        if c == '"' {
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(err(span.line, span.col, "unterminated string literal".into()))
                    }
                    Some('"') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some('\\') => {
                        let esc = chars.get(i + 1).copied();
                        match esc {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            _ => return Err(err(line, col, "invalid escape in string literal".into())),
                        }
                        i += 2;
                        col += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            out.push((Tok::Str(s), span));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCT.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len() as u32;
                out.push((Tok::Punct(p), span));
            }
            None => return Err(err(line, col, format!("unexpected character `{c}`"))),
        }
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

/// Parses kernel source text into an AST.
pub fn parse(source: &str) -> Result<KernelAst, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0 };
    let ast = p.program()?;
    p.expect_eof()?;
    Ok(ast)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let span = self.span();
        Err(ParseError { line: span.line, column: span.col, message: message.into() })
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.is_punct(p) {
            Ok(self.bump().1)
        } else {
            self.unexpected(&format!("`{p}`"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.is_kw(kw) {
            Ok(self.bump().1)
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(w) if !KEYWORDS.contains(&w.as_str()) => {
                let span = self.bump().1;
                Ok(Ident::new(w, span))
            }
            _ => self.unexpected("identifier"),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => self.unexpected("end of input"),
        }
    }

    fn program(&mut self) -> PResult<KernelAst> {
        self.expect_kw("fn")?;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let pname = self.ident()?;
                self.expect_punct(":")?;
                let ty = self.param_type()?;
                params.push(Param { name: pname, ty });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        let mut decls = Vec::new();
        while self.is_kw("var") {
            decls.push(self.decl()?);
        }
        let mut body = Vec::new();
        while !self.is_kw("return") {
            if matches!(self.peek(), Tok::Eof) || self.is_punct("}") {
                return self.unexpected("`return`");
            }
            body.push(self.stmt()?);
        }
        self.expect_kw("return")?;
        let result = self.ident()?;
        self.expect_punct(";")?;
        self.expect_punct("}")?;
        Ok(KernelAst { name, params, decls, body, result })
    }

    fn fields(&mut self) -> PResult<Schema> {
        self.expect_punct("(")?;
        let mut fields = Vec::new();
        loop {
            let name = self.ident()?;
            self.expect_punct(":")?;
            let ty = if self.is_kw("int") {
                self.bump();
                ScalarType::Int
            } else if self.is_kw("text") {
                self.bump();
                ScalarType::Text
            } else {
                return self.unexpected("`int` or `text`");
            };
            fields.push(Field::new(name.name, ty));
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        Ok(Schema::new(fields))
    }

    fn param_type(&mut self) -> PResult<ParamType> {
        if self.is_kw("rel") {
            self.bump();
            Ok(ParamType::Rel(self.fields()?))
        } else if self.is_kw("int") {
            self.bump();
            Ok(ParamType::Int)
        } else if self.is_kw("text") {
            self.bump();
            Ok(ParamType::Text)
        } else {
            self.unexpected("parameter type")
        }
    }

    fn decl(&mut self) -> PResult<Decl> {
        self.expect_kw("var")?;
        let name = self.ident()?;
        self.expect_punct(":")?;
        let ty = if self.is_kw("list") {
            self.bump();
            VarType::List(self.fields()?)
        } else if self.is_kw("int") {
            self.bump();
            if self.eat_punct("?") {
                VarType::OptInt
            } else {
                VarType::Int
            }
        } else if self.is_kw("text") {
            self.bump();
            VarType::Text
        } else {
            return self.unexpected("variable type");
        };
        let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
        self.expect_punct(";")?;
        Ok(Decl { name, ty, init })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.unexpected("`}`");
            }
            stmts.push(self.stmt()?);
        }
        self.expect_punct("}")?;
        Ok(stmts)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        if self.is_kw("if") {
            let span = self.bump().1;
            let cond = self.expr()?;
            let then_branch = self.block()?;
            let else_branch = if self.is_kw("else") {
                self.bump();
                Some(self.block()?)
            } else {
                None
            };
            return Ok(Stmt::If { cond, then_branch, else_branch, span });
        }
        if self.is_kw("for") {
            let span = self.bump().1;
            let index = self.ident()?;
            self.expect_kw("in")?;
            match self.peek() {
                Tok::Int(0) => {
                    self.bump();
                }
                _ => return self.unexpected("`0`"),
            }
            self.expect_punct("..")?;
            self.expect_kw("size")?;
            self.expect_punct("(")?;
            let relation = self.ident()?;
            self.expect_punct(")")?;
            let body = self.block()?;
            return Ok(Stmt::For { index, relation, body, span });
        }
        if self.is_kw("break") {
            let span = self.bump().1;
            self.expect_punct(";")?;
            return Ok(Stmt::Break { span });
        }
        let target = self.ident()?;
        if self.is_punct(".") && matches!(self.peek_at(1), Tok::Ident(w) if w == "append") {
            self.bump();
            self.bump();
            self.expect_punct("(")?;
            let value = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            return Ok(Stmt::Append { target, value });
        }
        self.expect_punct("=")?;
        let value = self.expr()?;
        self.expect_punct(";")?;
        Ok(Stmt::Assign { target, value })
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek() else { return None };
        Some(match *p {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    // Precedence climbing. Comparisons do not chain.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let span = self.bump().1;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
            if op.is_comparison() && self.binop().is_some_and(|o| o.is_comparison()) {
                return self.error("comparison operators do not chain");
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_punct("-") {
            let span = self.bump().1;
            if let Tok::Int(v) = *self.peek() {
                self.bump();
                return Ok(Expr::new(ExprKind::Int(-v), span));
            }
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), span));
        }
        if self.is_punct("!") {
            let span = self.bump().1;
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e)), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.is_punct("[") {
                let span = self.bump().1;
                let index = self.expr()?;
                self.expect_punct("]")?;
                e = Expr::new(ExprKind::Index { base: Box::new(e), index: Box::new(index) }, span);
            } else if self.is_punct(".") {
                let span = self.bump().1;
                let name = self.ident()?;
                e = Expr::new(ExprKind::Field { base: Box::new(e), name: name.name }, span);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(v), span))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::new(ExprKind::Text(s), span))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("{") => {
                self.bump();
                let mut fields = Vec::new();
                if !self.is_punct("}") {
                    loop {
                        let name = self.ident()?;
                        self.expect_punct(":")?;
                        let value = self.expr()?;
                        fields.push((name, value));
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct("}")?;
                Ok(Expr::new(ExprKind::Record(fields), span))
            }
            Tok::Ident(w) if w == "none" => {
                self.bump();
                Ok(Expr::new(ExprKind::None, span))
            }
            Tok::Ident(w) if w == "min" || w == "max" => {
                self.bump();
                let f = if w == "min" { Builtin::Min } else { Builtin::Max };
                self.expect_punct("(")?;
                let a = self.expr()?;
                self.expect_punct(",")?;
                let b = self.expr()?;
                self.expect_punct(")")?;
                Ok(Expr::new(ExprKind::Call(f, Box::new(a), Box::new(b)), span))
            }
            Tok::Ident(_) => {
                let id = self.ident()?;
                Ok(Expr::new(ExprKind::Var(id.name), span))
            }
            _ => self.unexpected("expression"),
        }
    }
}
