//! Reader for the emitted SQL fragment. `parse_sql(render(q)) == q` for
//! every query `to_sql` produces.

use super::{Limit, SelectItem, SqlError, SqlQuery, RID};
use crate::tor::{AggKind, CmpOp, ColRef, Operand, Pred};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Param(String),
    Op(CmpOp),
    Dot,
    Comma,
    Star,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<Tok>, SqlError> {
    let bad = |m: String| SqlError::Syntax(m);
    let cs: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let word = |i: &mut usize| {
        let s = *i;
        while *i < cs.len() && (cs[*i].is_alphanumeric() || cs[*i] == '_') {
            *i += 1;
        }
        cs[s..*i].iter().collect::<String>()
    };
    while i < cs.len() {
        let c = cs[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '.' => {
                out.push(Tok::Dot);
                i += 1
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            '=' => {
                out.push(Tok::Op(CmpOp::Eq));
                i += 1
            }
            '<' | '>' => {
                let next = cs.get(i + 1).copied();
                let (op, len) = match (c, next) {
                    ('<', Some('>')) => (CmpOp::Ne, 2),
                    ('<', Some('=')) => (CmpOp::Le, 2),
                    ('>', Some('=')) => (CmpOp::Ge, 2),
                    ('<', _) => (CmpOp::Lt, 1),
                    _ => (CmpOp::Gt, 1),
                };
                out.push(Tok::Op(op));
                i += len;
            }
            ':' => {
                i += 1;
                let w = word(&mut i);
                if w.is_empty() {
                    return Err(bad("empty parameter name".into()));
                }
                out.push(Tok::Param(w));
            }
            '\'' => {
                i += 1;
                let mut s = String::new();
                loop {
                    match cs.get(i) {
                        None => return Err(bad("unterminated string".into())),
                        Some('\'') if cs.get(i + 1) == Some(&'\'') => {
                            s.push('\'');
                            i += 2;
                        }
                        Some('\'') => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push(Tok::Str(s));
            }
            '-' | '0'..='9' => {
                let s = i;
                i += 1;
                while i < cs.len() && cs[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = cs[s..i].iter().collect();
                out.push(Tok::Int(text.parse().map_err(|_| bad(format!("bad integer `{text}`")))?));
            }
            c if c.is_alphabetic() || c == '_' => out.push(Tok::Ident(word(&mut i))),
            other => return Err(bad(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct P {
    toks: Vec<Tok>,
    pos: usize,
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Result<Tok, SqlError> {
        let t = self.toks.get(self.pos).cloned().ok_or_else(|| SqlError::Syntax("unexpected end of query".into()))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, t: Tok) -> Result<(), SqlError> {
        let got = self.next()?;
        if got == t {
            Ok(())
        } else {
            Err(SqlError::Syntax(format!("expected {t:?}, found {got:?}")))
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(w)) if w == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.keyword(kw) {
            Ok(())
        } else {
            Err(SqlError::Syntax(format!("expected {kw}")))
        }
    }

    fn ident(&mut self) -> Result<String, SqlError> {
        match self.next()? {
            Tok::Ident(w) => Ok(w),
            t => Err(SqlError::Syntax(format!("expected identifier, found {t:?}"))),
        }
    }

    fn column(&mut self) -> Result<ColRef, SqlError> {
        let q = self.ident()?;
        self.expect(Tok::Dot)?;
        Ok(ColRef::new(q, self.ident()?))
    }

    fn is_call(&self) -> bool {
        matches!(self.toks.get(self.pos + 1), Some(Tok::LParen))
    }

    fn item(&mut self) -> Result<SelectItem, SqlError> {
        if self.is_call() {
            let f = self.ident()?;
            self.expect(Tok::LParen)?;
            let item = match f.as_str() {
                "COUNT" => {
                    self.expect(Tok::Star)?;
                    SelectItem::Agg(AggKind::Count, None)
                }
                "COALESCE" => {
                    self.expect_kw("SUM")?;
                    self.expect(Tok::LParen)?;
                    let c = self.column()?;
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::Comma)?;
                    self.expect(Tok::Int(0))?;
                    SelectItem::Agg(AggKind::Sum, Some(c))
                }
                "MIN" => SelectItem::Agg(AggKind::Min, Some(self.column()?)),
                "MAX" => SelectItem::Agg(AggKind::Max, Some(self.column()?)),
                other => return Err(SqlError::Syntax(format!("unsupported function {other}"))),
            };
            self.expect(Tok::RParen)?;
            return Ok(item);
        }
        let q = self.ident()?;
        self.expect(Tok::Dot)?;
        match self.next()? {
            Tok::Star => Ok(SelectItem::Star(q)),
            Tok::Ident(n) => Ok(SelectItem::Column(ColRef::new(q, n))),
            t => Err(SqlError::Syntax(format!("expected column, found {t:?}"))),
        }
    }

    fn operand(&mut self) -> Result<Operand, SqlError> {
        match self.peek() {
            Some(Tok::Int(_)) | Some(Tok::Str(_)) | Some(Tok::Param(_)) => Ok(match self.next()? {
                Tok::Int(k) => Operand::Int(k),
                Tok::Str(s) => Operand::Text(s),
                Tok::Param(p) => Operand::Var(p),
                _ => unreachable!(),
            }),
            _ => Ok(Operand::Field(self.column()?)),
        }
    }

    fn or(&mut self) -> Result<Pred, SqlError> {
        let mut parts = vec![self.and()?];
        while self.keyword("OR") {
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Pred::Or(parts) })
    }

    fn and(&mut self) -> Result<Pred, SqlError> {
        let mut parts = vec![self.unary()?];
        while self.keyword("AND") {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Pred::And(parts) })
    }

    fn unary(&mut self) -> Result<Pred, SqlError> {
        if self.keyword("NOT") {
            self.expect(Tok::LParen)?;
            let p = self.or()?;
            self.expect(Tok::RParen)?;
            return Ok(Pred::Not(Box::new(p)));
        }
        if self.keyword("TRUE") {
            return Ok(Pred::True);
        }
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let p = self.or()?;
            self.expect(Tok::RParen)?;
            return Ok(p);
        }
        let a = self.operand()?;
        let op = match self.next()? {
            Tok::Op(op) => op,
            t => return Err(SqlError::Syntax(format!("expected comparison, found {t:?}"))),
        };
        Ok(Pred::Atom(op, a, self.operand()?))
    }
}

/// Parses the SQL fragment that [`super::render`] produces.
pub fn parse_sql(src: &str) -> Result<SqlQuery, SqlError> {
    let mut p = P { toks: lex(src)?, pos: 0 };
    p.expect_kw("SELECT")?;
    let mut select = vec![p.item()?];
    while p.peek() == Some(&Tok::Comma) {
        p.pos += 1;
        select.push(p.item()?);
    }
    p.expect_kw("FROM")?;
    let mut from = vec![p.ident()?];
    while p.peek() == Some(&Tok::Comma) {
        p.pos += 1;
        from.push(p.ident()?);
    }
    let filter = if p.keyword("WHERE") { Some(p.or()?) } else { None };
    let mut order_by = Vec::new();
    if p.keyword("ORDER") {
        p.expect_kw("BY")?;
        loop {
            let c = p.column()?;
            if c.name != RID {
                return Err(SqlError::Syntax(format!("ORDER BY only supports rid columns, found {c}")));
            }
            order_by.push(c.qual);
            if p.peek() != Some(&Tok::Comma) {
                break;
            }
            p.pos += 1;
        }
    }
    let limit = if p.keyword("LIMIT") {
        Some(match p.next()? {
            Tok::Int(k) => Limit::Int(k),
            Tok::Param(v) => Limit::Param(v),
            t => return Err(SqlError::Syntax(format!("expected limit, found {t:?}"))),
        })
    } else {
        None
    };
    if let Some(t) = p.peek() {
        return Err(SqlError::Syntax(format!("trailing input at {t:?}")));
    }
    Ok(SqlQuery { select, from, filter, order_by, limit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::render;

    #[test]
    fn round_trips_rendered_text() {
        for src in [
            "SELECT R.* FROM R ORDER BY R.rid",
            "SELECT R.name, S.tag FROM R, S WHERE R.id = S.owner AND S.tag = 'b' ORDER BY R.rid, S.rid LIMIT :k",
            "SELECT COALESCE(SUM(R.a), 0) FROM R WHERE NOT (R.a <> -1) AND (R.a < 2 OR R.b >= :p)",
            "SELECT COUNT(*) FROM R",
            "SELECT MIN(R.a) FROM R WHERE TRUE",
        ] {
            assert_eq!(render(&parse_sql(src).unwrap()), src);
        }
    }

    #[test]
    fn rejects_other_sql() {
        for src in ["SELECT * FROM R", "SELECT R.a FROM R ORDER BY R.a", "SELECT R.a FROM R GROUP BY R.a", "SELECT R.a"] {
            assert!(parse_sql(src).is_err(), "{src}");
        }
    }
}
