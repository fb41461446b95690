//! Semantics-preserving rewriting of TOR expressions to a normal form.
//!
//! Rules are tried in a fixed order at every node, bottom-up, until no rule
//! applies:
//!
//! 1. `top(e, size(e)) => e`, `top(top(e, c1), c2) => top(e, min(c1, c2))`
//!    for integer constants, and `top(empty, k) => empty`.
//! 2. `sel(p2, sel(p1, e)) => sel(p1 and p2, e)` and `sel(true, e) => e`.
//! 3. `proj(F, sel(p, e)) => sel(p, proj(F, e))` when `p` only mentions
//!    columns in `F`.
//! 4. `concat(e, append(empty, r)) => append(e, r)`.
//! 5. `concat(empty, e) => e`, `concat(e, empty) => e`, selections and
//!    projections of `empty` become `empty`, and `size(empty)` becomes `0`
//!    in count positions.

use super::expr::*;

pub fn simplify(e: &TorExpr) -> TorExpr {
    let mut cur = e.clone();
    loop {
        let next = pass(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

pub fn simplify_scalar(k: &ScalarExpr) -> ScalarExpr {
    let mut cur = k.clone();
    loop {
        let next = scalar_pass(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

fn pass(e: &TorExpr) -> TorExpr {
    let b = |x: &TorExpr| Box::new(pass(x));
    let rebuilt = match e {
        TorExpr::Query(_) | TorExpr::Empty(_) => e.clone(),
        TorExpr::Sel(x, p) => TorExpr::Sel(b(x), p.clone()),
        TorExpr::Proj(x, cols) => TorExpr::Proj(b(x), cols.clone()),
        TorExpr::Join(l, r, p) => TorExpr::Join(b(l), b(r), p.clone()),
        TorExpr::Top(x, k) => TorExpr::Top(b(x), scalar_pass(k)),
        TorExpr::Get(x, k) => TorExpr::Get(b(x), scalar_pass(k)),
        TorExpr::Append(x, r) => TorExpr::Append(b(x), b(r)),
        TorExpr::Concat(l, r) => TorExpr::Concat(b(l), b(r)),
        TorExpr::Agg(kind, c, x) => TorExpr::Agg(*kind, c.clone(), b(x)),
        TorExpr::Size(x) => TorExpr::Size(b(x)),
    };
    rewrite_root(rebuilt)
}

fn scalar_pass(k: &ScalarExpr) -> ScalarExpr {
    match k {
        ScalarExpr::Size(e) => match pass(e) {
            TorExpr::Empty(_) => ScalarExpr::Int(0),
            e => ScalarExpr::Size(Box::new(e)),
        },
        ScalarExpr::Add(a, b) => ScalarExpr::Add(Box::new(scalar_pass(a)), Box::new(scalar_pass(b))),
        ScalarExpr::Sub(a, b) => ScalarExpr::Sub(Box::new(scalar_pass(a)), Box::new(scalar_pass(b))),
        other => other.clone(),
    }
}

fn rewrite_root(e: TorExpr) -> TorExpr {
    match e {
        TorExpr::Top(x, k) => match (*x, k) {
            (x, ScalarExpr::Size(s)) if *s == x => x,
            (TorExpr::Top(y, ScalarExpr::Int(c1)), ScalarExpr::Int(c2)) => TorExpr::Top(y, ScalarExpr::Int(c1.min(c2))),
            (TorExpr::Empty(s), _) => TorExpr::Empty(s),
            (x, k) => TorExpr::Top(Box::new(x), k),
        },
        TorExpr::Sel(x, Pred::True) => *x,
        TorExpr::Sel(x, p2) => match *x {
            TorExpr::Sel(y, p1) => TorExpr::Sel(y, Pred::and(vec![p1, p2])),
            TorExpr::Empty(s) => TorExpr::Empty(s),
            x => TorExpr::Sel(Box::new(x), p2),
        },
        TorExpr::Proj(x, cols) => match *x {
            TorExpr::Sel(y, p) if pred_within(&p, &cols) => TorExpr::Sel(Box::new(TorExpr::Proj(y, cols)), p),
            TorExpr::Empty(s) => {
                let picked = cols.iter().filter_map(|c| s.cols.iter().find(|x| x.col == *c).cloned()).collect();
                TorExpr::Empty(TorSchema { cols: picked })
            }
            x => TorExpr::Proj(Box::new(x), cols),
        },
        TorExpr::Concat(l, r) => match (*l, *r) {
            (l, TorExpr::Append(inner, rec)) if matches!(*inner, TorExpr::Empty(_)) => TorExpr::Append(Box::new(l), rec),
            (TorExpr::Empty(_), r) => r,
            (l, TorExpr::Empty(_)) => l,
            (l, r) => TorExpr::Concat(Box::new(l), Box::new(r)),
        },
        other => other,
    }
}

fn pred_within(p: &Pred, cols: &[ColRef]) -> bool {
    let mut used = Vec::new();
    p.fields(&mut used);
    used.iter().all(|c| cols.contains(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tor::parse_expr;

    fn simp(src: &str) -> String {
        simplify(&parse_expr(src).unwrap()).to_string()
    }

    #[test]
    fn each_rule_fires() {
        assert_eq!(simp("(top (query R) (size (query R)))"), "(query R)");
        assert_eq!(simp("(top (top (query R) 3) 2)"), "(top (query R) 2)");
        assert_eq!(simp("(top (empty (R.a int)) k)"), "(empty (R.a int))");
        assert_eq!(
            simp("(sel (< (field R.a) 5) (sel (> (field R.a) 1) (query R)))"),
            "(sel (and (> (field R.a) 1) (< (field R.a) 5)) (query R))"
        );
        assert_eq!(simp("(sel true (query R))"), "(query R)");
        assert_eq!(
            simp("(proj (R.a) (sel (> (field R.a) 1) (query R)))"),
            "(sel (> (field R.a) 1) (proj (R.a) (query R)))"
        );
        assert_eq!(
            simp("(proj (R.a) (sel (> (field R.b) 1) (query R)))"),
            "(proj (R.a) (sel (> (field R.b) 1) (query R)))"
        );
        assert_eq!(
            simp("(concat (query R) (append (empty (R.a int)) (get (query R) 0)))"),
            "(append (query R) (get (query R) 0))"
        );
        assert_eq!(simp("(concat (empty (R.a int)) (query R))"), "(query R)");
        assert_eq!(simp("(top (query R) (size (sel true (empty (R.a int)))))"), "(top (query R) 0)");
    }

    #[test]
    fn normal_form_is_a_fixpoint() {
        let e = parse_expr("(top (sel (> (field R.a) 1) (sel true (query R))) (size (sel (> (field R.a) 1) (query R))))").unwrap();
        let once = simplify(&e);
        assert_eq!(simplify(&once), once);
        assert_eq!(once.to_string(), "(sel (> (field R.a) 1) (query R))");
    }
}
