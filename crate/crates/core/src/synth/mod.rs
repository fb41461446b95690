//! Template extraction, candidate enumeration and the synthesis driver.

mod candidate;
mod driver;
mod enumerate;
mod template;

pub use candidate::{Candidate, LoopInvariant};
pub use driver::{synthesize, Failure, FailureReason, Solution, SynthConfig, SynthOutcome, SynthStats};
pub use enumerate::{enumerate, MAX_CONJUNCTS};
pub use template::{extract_template, LiveVar, LoopNode, Template};
