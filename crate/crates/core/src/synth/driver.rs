//! The synthesis driver: enumerate, verify in order, emit.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{enumerate, extract_template, Candidate};
use crate::emit::{render, to_sql, SqlQuery};
use crate::frontend::TypedProgram;
use crate::verify::{BoundedChecker, Bounds, Validation, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SynthConfig {
    pub cost_bound: usize,
    pub bounds: Bounds,
    /// Wall-clock budget; `None` disables the timeout.
    pub timeout_seconds: Option<f64>,
    /// Worker threads used to verify candidates. Does not affect results.
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { cost_bound: 24, bounds: Bounds::default(), timeout_seconds: Some(120.0), jobs: 1 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SynthStats {
    pub candidates_enumerated: u64,
    pub candidates_tried: u64,
    pub candidates_rejected: u64,
    pub vcs_checked: u64,
    pub instances_enumerated: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub candidate: Candidate,
    pub cost: usize,
    pub sql: SqlQuery,
    pub sql_text: String,
    pub stats: SynthStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureReason {
    Exhausted,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub reason: FailureReason,
    pub stats: SynthStats,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthOutcome {
    Solved(Box<Solution>),
    Failed(Failure),
}

impl SynthOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            SynthOutcome::Solved(s) => Some(s),
            SynthOutcome::Failed(_) => None,
        }
    }

    pub fn stats(&self) -> &SynthStats {
        match self {
            SynthOutcome::Solved(s) => &s.stats,
            SynthOutcome::Failed(f) => &f.stats,
        }
    }
}

enum Judged {
    Accepted(SqlQuery, Validation),
    Rejected(Option<Validation>),
}

fn judge(checker: &BoundedChecker, prog: &TypedProgram, cand: &Candidate) -> Judged {
    let Ok(sql) = to_sql(&cand.post) else { return Judged::Rejected(None) };
    match checker.validate(prog, cand) {
        Ok(v) if v.verdict == Verdict::Valid => Judged::Accepted(sql, v),
        Ok(v) => Judged::Rejected(Some(v)),
        Err(_) => Judged::Rejected(None),
    }
}

/// Returns the first candidate in enumeration order that the verifier
/// accepts. Candidates are checked in batches; within a batch the earliest
/// accepted one wins, so the result does not depend on `cfg.jobs`.
pub fn synthesize(prog: &TypedProgram, cfg: &SynthConfig) -> SynthOutcome {
    let start = Instant::now();
    let deadline = cfg.timeout_seconds.map(|s| start + Duration::from_secs_f64(s.max(0.0)));
    let candidates = enumerate(&extract_template(prog), cfg.cost_bound);
    let checker = BoundedChecker::new(prog, cfg.bounds.clone());
    let mut stats = SynthStats { candidates_enumerated: candidates.len() as u64, ..Default::default() };
    let jobs = cfg.jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    for batch in candidates.chunks(jobs) {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return SynthOutcome::Failed(Failure { reason: FailureReason::Timeout, stats });
        }
        let judged: Vec<Judged> = if jobs == 1 {
            batch.iter().map(|c| judge(&checker, prog, c)).collect()
        } else {
            pool.install(|| batch.par_iter().map(|c| judge(&checker, prog, c)).collect())
        };
        for (cand, j) in batch.iter().zip(judged) {
            stats.candidates_tried += 1;
            match j {
                Judged::Accepted(sql, v) => {
                    stats.vcs_checked += v.vcs_checked;
                    stats.instances_enumerated += v.instances;
                    let sql_text = render(&sql);
                    return SynthOutcome::Solved(Box::new(Solution {
                        cost: cand.cost(),
                        candidate: cand.clone(),
                        sql,
                        sql_text,
                        stats,
                    }));
                }
                Judged::Rejected(v) => {
                    stats.candidates_rejected += 1;
                    if let Some(v) = v {
                        stats.vcs_checked += v.vcs_checked;
                        stats.instances_enumerated += v.instances;
                    }
                }
            }
        }
    }
    SynthOutcome::Failed(Failure { reason: FailureReason::Exhausted, stats })
}
