#![allow(dead_code)]

//! The hand-mutated candidate fixture and its verdicts.

use qil_core::synth::Candidate;
use qil_core::verify::{replay, validate, Bounds, Verdict};
use qil_core::{load, TypedProgram};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct Mutant {
    pub name: String,
    pub benchmark: String,
    pub kind: String,
    pub description: String,
    pub candidate: String,
}

#[derive(Debug, Deserialize)]
struct Fixture {
    mutant: Vec<Mutant>,
}

/// Outcome for one mutant: `Ok` holds the failed condition, `Err` says why
/// the mutant escaped.
pub type Kill = Result<String, String>;

fn root() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn mutants() -> Vec<Mutant> {
    let text = std::fs::read_to_string(root().join("fixtures/mutants.toml")).expect("fixture");
    toml::from_str::<Fixture>(&text).expect("fixture parses").mutant
}

pub fn program(stem: &str) -> TypedProgram {
    load(&std::fs::read_to_string(root().join(format!("benchmarks/{stem}.qil"))).unwrap()).unwrap()
}

pub fn kill(m: &Mutant) -> Kill {
    let prog = program(&m.benchmark);
    let cand = Candidate::parse(&m.candidate).map_err(|e| format!("unparsable: {e}"))?;
    match validate(&prog, &cand, &Bounds::default()) {
        Err(e) => Err(format!("not checkable: {e}")),
        Ok(Verdict::Valid) => Err("accepted".into()),
        Ok(Verdict::Counterexample(cex)) => match replay(&prog, &cand, &cex) {
            Ok(true) => Ok(cex.vc.to_string()),
            Ok(false) => Err(format!("counterexample for {} does not replay", cex.vc)),
            Err(e) => Err(format!("replay failed: {e}")),
        },
    }
}
