//! Synthesis of order-preserving SQL from imperative kernels that traverse
//! ordered relations.
//!
//! The pipeline parses a `.qil` kernel ([`frontend`]), scans it for a
//! synthesis template and enumerates candidate loop invariants and
//! postconditions over the theory of ordered relations ([`synth`], [`tor`]),
//! checks each candidate with a bounded inductive verifier ([`verify`]), and
//! turns the first accepted postcondition into SQL that is differentially
//! tested against the reference interpreter ([`emit`], [`pipeline`]).

pub mod bindings;
pub mod emit;
pub mod frontend;
pub mod interp;
pub mod pipeline;
pub mod synth;
pub mod tor;
pub mod types;
pub mod verify;

pub use frontend::{load, parse, typecheck, KernelAst, TypedProgram};
pub use interp::{run, trace, Bindings};
pub use types::{Field, OrderedRelation, Scalar, ScalarType, Schema, Value};
