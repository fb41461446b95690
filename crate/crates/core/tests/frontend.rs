use proptest::prelude::*;
use qil_core::frontend::ast::*;
use qil_core::frontend::{check_invariants, parse, pretty, typecheck};
use qil_core::types::{Field, ScalarType, Schema};

fn corpus() -> Vec<(String, String)> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../benchmarks");
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect()
}

#[derive(Default, Debug, PartialEq)]
struct Inventory {
    loops: usize,
    max_depth: usize,
    ifs: usize,
    appends: usize,
}

fn inventory(stmts: &[Stmt], depth: usize, inv: &mut Inventory) {
    for s in stmts {
        match s {
            Stmt::For { body, .. } => {
                inv.loops += 1;
                inv.max_depth = inv.max_depth.max(depth + 1);
                inventory(body, depth + 1, inv);
            }
            Stmt::If { then_branch, else_branch, .. } => {
                inv.ifs += 1;
                inventory(then_branch, depth, inv);
                if let Some(e) = else_branch {
                    inventory(e, depth, inv);
                }
            }
            Stmt::Append { .. } => inv.appends += 1,
            _ => {}
        }
    }
}

#[test]
fn minimal_program_parses() {
    let ast = parse("fn id(R: rel(a:int)) { var out: list(a:int); for i in 0..size(R) { out.append(R[i]); } return out; }")
        .unwrap();
    let mut inv = Inventory::default();
    inventory(&ast.body, 0, &mut inv);
    assert_eq!((inv.loops, inv.appends), (1, 1));
}

#[test]
fn malformed_header_reports_line_one() {
    let err = parse("fn bad( { ").unwrap_err();
    assert_eq!(err.line, 1);
}

#[test]
fn equi_join_inventory() {
    let (_, src) = corpus().into_iter().find(|(n, _)| n.contains("equi_join")).unwrap();
    let ast = parse(&src).unwrap();
    let mut inv = Inventory::default();
    inventory(&ast.body, 0, &mut inv);
    assert_eq!(inv, Inventory { loops: 2, max_depth: 2, ifs: 1, appends: 1 });
    assert_eq!(parse(&pretty(&ast)).unwrap(), ast);
}

#[test]
fn corpus_round_trips_and_typechecks() {
    let all = corpus();
    assert_eq!(all.len(), 12);
    for (name, src) in all {
        let ast = parse(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse(&pretty(&ast)).unwrap(), ast, "{name}");
        let prog = typecheck(&ast).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        assert!(check_invariants(&prog).is_empty(), "{name}");
    }
}

#[test]
fn type_errors_from_examples() {
    let msg = |src: &str| typecheck(&parse(src).unwrap()).unwrap_err()[0].message.clone();
    assert!(msg("fn f(R: rel(a:int)) { var c: int = 0; for i in 0..size(R) { if R[i].a == \"x\" { c = 1; } } return c; }")
        .contains("type mismatch"));
    let deep = "fn f(R: rel(a:int), S: rel(b:int), T: rel(c:int)) { var c: int = 0; \
        for i in 0..size(R) { for j in 0..size(S) { for k in 0..size(T) { c = c + 1; } } } return c; }";
    assert!(msg(deep).contains("nesting depth exceeded"));
}

#[test]
fn typecheck_is_deterministic() {
    let bad = parse("fn f(R: rel(a:int)) { var c: int = \"x\"; c = q; for i in 0..size(R) { c = R[i].b; } return z; }").unwrap();
    assert_eq!(typecheck(&bad).unwrap_err(), typecheck(&bad).unwrap_err());
    for (_, src) in corpus() {
        let ast = parse(&src).unwrap();
        let (a, b) = (typecheck(&ast).unwrap(), typecheck(&ast).unwrap());
        assert_eq!(format!("{:?}", a.body), format!("{:?}", b.body));
        assert_eq!(format!("{:?}", a.vars), format!("{:?}", b.vars));
    }
}

// Random syntax trees. They need not type-check; only the printer and the
// parser are exercised.

fn sp() -> Span {
    Span::default()
}

fn ident() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["x", "y", "acc", "out", "R", "S", "k"]).prop_map(str::to_string)
}

fn schema() -> impl Strategy<Value = Schema> {
    prop::collection::btree_map(
        prop::sample::select(vec!["a", "b", "c", "tag"]),
        prop::sample::select(vec![ScalarType::Int, ScalarType::Text]),
        1..4,
    )
    .prop_map(|m| Schema::new(m.into_iter().map(|(n, t)| Field::new(n, t)).collect()))
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-5i64..50).prop_map(ExprKind::Int),
        "[a-z \"]{0,4}".prop_map(ExprKind::Text),
        Just(ExprKind::None),
        ident().prop_map(ExprKind::Var),
        (ident(), ident(), prop::sample::select(vec!["a", "b"])).prop_map(|(r, i, f)| ExprKind::Field {
            base: Box::new(Expr::new(
                ExprKind::Index {
                    base: Box::new(Expr::new(ExprKind::Var(r), sp())),
                    index: Box::new(Expr::new(ExprKind::Var(i), sp())),
                },
                sp()
            )),
            name: f.to_string(),
        }),
    ]
    .prop_map(|k| Expr::new(k, sp()));
    leaf.prop_recursive(3, 24, 3, |inner| {
        let bin = prop::sample::select(vec![
            BinOp::Add,
            BinOp::Sub,
            BinOp::Eq,
            BinOp::Ne,
            BinOp::Lt,
            BinOp::Le,
            BinOp::Gt,
            BinOp::Ge,
            BinOp::And,
            BinOp::Or,
        ]);
        prop_oneof![
            (bin, inner.clone(), inner.clone()).prop_map(|(op, a, b)| ExprKind::Binary(op, Box::new(a), Box::new(b))),
            (prop::sample::select(vec![UnOp::Neg, UnOp::Not]), inner.clone())
                .prop_map(|(op, a)| ExprKind::Unary(op, Box::new(a))),
            (prop::sample::select(vec![Builtin::Min, Builtin::Max]), inner.clone(), inner.clone())
                .prop_map(|(f, a, b)| ExprKind::Call(f, Box::new(a), Box::new(b))),
            prop::collection::vec((prop::sample::select(vec!["a", "b"]), inner), 1..3).prop_map(|fs| {
                ExprKind::Record(fs.into_iter().map(|(n, e)| (Ident::new(n, sp()), e)).collect())
            }),
        ]
        .prop_map(|k| Expr::new(k, sp()))
    })
}

fn stmts(depth: u32) -> BoxedStrategy<Vec<Stmt>> {
    let simple = prop_oneof![
        (ident(), expr()).prop_map(|(t, v)| Stmt::Assign { target: Ident::new(t, sp()), value: v }),
        (ident(), expr()).prop_map(|(t, v)| Stmt::Append { target: Ident::new(t, sp()), value: v }),
        Just(Stmt::Break { span: sp() }),
    ];
    if depth == 0 {
        return prop::collection::vec(simple, 0..3).boxed();
    }
    let nested = prop_oneof![
        (expr(), stmts(depth - 1), prop::option::of(stmts(depth - 1))).prop_map(|(c, t, e)| Stmt::If {
            cond: c,
            then_branch: t,
            else_branch: e,
            span: sp()
        }),
        (ident(), ident(), stmts(depth - 1)).prop_map(|(i, r, b)| Stmt::For {
            index: Ident::new(i, sp()),
            relation: Ident::new(r, sp()),
            body: b,
            span: sp()
        }),
    ];
    prop::collection::vec(prop_oneof![2 => simple, 1 => nested], 0..4).boxed()
}

fn ast() -> impl Strategy<Value = KernelAst> {
    let param = (ident(), prop_oneof![schema().prop_map(ParamType::Rel), Just(ParamType::Int), Just(ParamType::Text)])
        .prop_map(|(n, ty)| Param { name: Ident::new(n, sp()), ty });
    let decl = (
        ident(),
        prop_oneof![schema().prop_map(VarType::List), Just(VarType::Int), Just(VarType::Text), Just(VarType::OptInt)],
        prop::option::of(expr()),
    )
        .prop_map(|(n, ty, init)| Decl { name: Ident::new(n, sp()), ty, init });
    (ident(), prop::collection::vec(param, 0..3), prop::collection::vec(decl, 0..3), stmts(2), ident()).prop_map(
        |(name, params, decls, body, result)| KernelAst {
            name: Ident::new(name, sp()),
            params,
            decls,
            body,
            result: Ident::new(result, sp()),
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn random_asts_round_trip(a in ast()) {
        let text = pretty(&a);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, a);
    }
}
