//! Kernel-language frontend: lexing, parsing, pretty-printing and type
//! checking of `.qil` sources.

pub mod ast;
mod parser;
mod pretty;
mod typeck;

pub use ast::KernelAst;
pub use parser::{parse, ParseError};
pub use pretty::{expr as pretty_expr, pretty};
pub use typeck::{
    check_invariants, typecheck, LoopId, LoopInfo, TExpr, TExprKind, TStmt, Ty, TypeError,
    TypedProgram, VarId, VarInfo, VarKind, MAX_LOOP_DEPTH, ORDINAL_COLUMN,
};

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Type(Vec<TypeError>),
}

/// Parses and type checks in one step.
pub fn load(source: &str) -> Result<TypedProgram, FrontendError> {
    let ast = parse(source)?;
    typecheck(&ast).map_err(FrontendError::Type)
}
