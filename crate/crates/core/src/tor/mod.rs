//! The theory of ordered relations (TOR): an algebra of order-preserving
//! relational operators used as the specification language for loop
//! invariants and postconditions.

pub mod axioms;
mod eval;
mod expr;
pub mod plan;
pub mod simplify;
pub mod text;

use thiserror::Error;

pub use eval::{eval_rel, eval_scalar, TorEnv};
pub use expr::*;
pub use plan::{Plan, PlanValue};
pub use simplify::simplify;
pub use text::{expr_text, parse_expr, parse_pred, parse_scalar, pred_text, scalar_text};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TorError {
    #[error("unbound name `{0}`")]
    UnboundName(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("index {index} out of bounds for relation of size {size}")]
    Index { index: i64, size: usize },
    #[error("syntax error: {0}")]
    Syntax(String),
}
