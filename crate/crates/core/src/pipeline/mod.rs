//! End-to-end orchestration: synthesis, differential testing against the
//! interpreter, and JSON run reports.

mod gen;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::bindings::{bindings_to_json, value_to_json};
use crate::emit::{eval_sql, MiniDb, SqlQuery};
use crate::frontend::{load, TypedProgram};
use crate::interp::{run, Bindings};
use crate::synth::{synthesize, FailureReason, SynthConfig, SynthOutcome, SynthStats};
use crate::tor::expr_text;
use crate::types::Value;

pub use gen::{case_seeds, random_input, GenConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineConfig {
    #[serde(flatten)]
    pub synth: SynthConfig,
    pub cases: usize,
    pub seed: u64,
    #[serde(skip)]
    pub gen: GenConfig,
    /// Adds wall-clock time and thread count to reports. Reports are
    /// byte-reproducible only when this is off.
    #[serde(skip)]
    pub timing: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { synth: SynthConfig::default(), cases: 1000, seed: 0, gen: GenConfig::default(), timing: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiffFailure {
    pub case: usize,
    pub input: Json,
    pub expected: Json,
    pub actual: Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiffResult {
    pub cases: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<DiffFailure>,
}

fn outcome_json(r: Result<Value, String>) -> Json {
    match r {
        Ok(v) => value_to_json(&v),
        Err(e) => serde_json::json!({ "error": e }),
    }
}

/// Compares the interpreter with the SQL engine on one input.
pub fn compare(prog: &TypedProgram, sql: &SqlQuery, input: &Bindings) -> Result<(), (Json, Json)> {
    let expected = run(prog, input).map_err(|e| e.to_string());
    let actual = eval_sql(sql, &MiniDb::from_bindings(input)).map_err(|e| e.to_string());
    match (&expected, &actual) {
        (Ok(a), Ok(b)) if a.equivalent(b) => Ok(()),
        _ => Err((outcome_json(expected), outcome_json(actual))),
    }
}

/// Runs `cases` seeded random inputs through both sides. The failure count
/// and the lowest failing case index do not depend on `jobs`.
pub fn difftest(prog: &TypedProgram, sql: &SqlQuery, cases: usize, seed: u64, g: &GenConfig, jobs: usize) -> DiffResult {
    let seeds = case_seeds(seed, cases);
    let check = |(c, s): (usize, &u64)| {
        let input = random_input(prog, *s, g);
        compare(prog, sql, &input)
            .err()
            .map(|(expected, actual)| DiffFailure { case: c, input: bindings_to_json(&input), expected, actual })
    };
    let failures: Vec<DiffFailure> = if jobs <= 1 {
        seeds.iter().enumerate().filter_map(check).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
        pool.install(|| seeds.par_iter().enumerate().filter_map(check).collect())
    };
    DiffResult { cases, failures: failures.len(), first_failure: failures.into_iter().min_by_key(|f| f.case) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Synthesized,
    Failed,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LoopReport {
    #[serde(rename = "loop")]
    pub loop_id: String,
    pub index: String,
    pub relation: String,
    pub defs: Vec<DefReport>,
}

/// A live variable and the canonical TOR text of its definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DefReport {
    pub var: String,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolutionReport {
    pub cost: usize,
    pub invariants: Vec<LoopReport>,
    pub result: String,
    pub postcondition: String,
    /// The whole candidate in the text format accepted by `Candidate::parse`.
    pub candidate: String,
    pub sql: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Timing {
    pub wall_seconds: f64,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub program_name: String,
    pub file: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionReport>,
    pub stats: SynthStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difftest: Option<DiffResult>,
    pub config: PipelineConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl RunReport {
    /// 0 synthesized, 2 failed, 1 error.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Synthesized => 0,
            Status::Error => 1,
            Status::Failed => 2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Runs the whole pipeline on source text.
pub fn run_source(file: &str, source: &str, cfg: &PipelineConfig) -> RunReport {
    let start = Instant::now();
    let mut report = RunReport {
        program_name: file_stem(Path::new(file)),
        file: file.to_string(),
        status: Status::Error,
        reason: None,
        error: None,
        solution: None,
        stats: SynthStats::default(),
        difftest: None,
        config: cfg.clone(),
        timing: None,
    };
    let finish = |mut r: RunReport| {
        if cfg.timing {
            r.timing = Some(Timing { wall_seconds: start.elapsed().as_secs_f64(), jobs: cfg.synth.jobs.max(1) });
        }
        r
    };
    let prog = match load(source) {
        Ok(p) => p,
        Err(e) => {
            report.error = Some(e.to_string());
            return finish(report);
        }
    };
    report.program_name = prog.name.clone();
    let outcome = synthesize(&prog, &cfg.synth);
    report.stats = *outcome.stats();
    match outcome {
        SynthOutcome::Failed(f) => {
            report.status = Status::Failed;
            report.reason = Some(
                match f.reason {
                    FailureReason::Exhausted => "exhausted",
                    FailureReason::Timeout => "timeout",
                }
                .into(),
            );
        }
        SynthOutcome::Solved(s) => {
            let diff = difftest(&prog, &s.sql, cfg.cases, cfg.seed, &cfg.gen, cfg.synth.jobs);
            report.status = if diff.failures == 0 { Status::Synthesized } else { Status::Failed };
            if diff.failures > 0 {
                report.reason = Some("difftest".into());
            }
            report.difftest = Some(diff);
            report.solution = Some(SolutionReport {
                cost: s.cost,
                invariants: s
                    .candidate
                    .invariants
                    .iter()
                    .map(|l| LoopReport {
                        loop_id: format!("L{}", l.loop_id),
                        index: l.index.clone(),
                        relation: l.relation.clone(),
                        defs: l.defs.iter().map(|(v, e)| DefReport { var: v.clone(), expr: expr_text(e) }).collect(),
                    })
                    .collect(),
                result: s.candidate.result.clone(),
                postcondition: expr_text(&s.candidate.post),
                candidate: s.candidate.to_text(),
                sql: s.sql_text.clone(),
            });
        }
    }
    finish(report)
}

/// Reads and runs one `.qil` file. I/O failures become error reports.
pub fn run_pipeline(path: &Path, cfg: &PipelineConfig) -> RunReport {
    match std::fs::read_to_string(path) {
        Ok(src) => run_source(&path.display().to_string(), &src, cfg),
        Err(e) => {
            let mut r = run_source(&path.display().to_string(), "", cfg);
            r.error = Some(format!("cannot read {}: {e}", path.display()));
            r
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchmarkSummary {
    pub benchmarks: Vec<RunReport>,
    pub total: usize,
    pub synthesized: usize,
    pub failed: usize,
    pub errors: usize,
}

impl BenchmarkSummary {
    pub fn from_reports(benchmarks: Vec<RunReport>) -> Self {
        let count = |s: Status| benchmarks.iter().filter(|r| r.status == s).count();
        BenchmarkSummary {
            total: benchmarks.len(),
            synthesized: count(Status::Synthesized),
            failed: count(Status::Failed),
            errors: count(Status::Error),
            benchmarks,
        }
    }

    /// 0 when every benchmark synthesized, otherwise the worst report code
    /// with errors (1) taking precedence over failures (2).
    pub fn exit_code(&self) -> i32 {
        if self.errors > 0 {
            1
        } else if self.failed > 0 {
            2
        } else {
            0
        }
    }

    /// Human-readable table.
    pub fn table(&self) -> String {
        let mut out = format!("{:<28} {:<12} {:>5} {:>6}  {}\n", "program", "status", "cost", "tried", "sql");
        for r in &self.benchmarks {
            let status = match (r.status, &r.reason) {
                (Status::Synthesized, _) => "synthesized".to_string(),
                (Status::Failed, Some(reason)) => format!("failed:{reason}"),
                (Status::Failed, None) => "failed".to_string(),
                (Status::Error, _) => "error".to_string(),
            };
            let (cost, sql) = match &r.solution {
                Some(s) => (s.cost.to_string(), s.sql.as_str()),
                None => ("-".to_string(), r.error.as_deref().unwrap_or("")),
            };
            out.push_str(&format!(
                "{:<28} {:<12} {:>5} {:>6}  {}\n",
                r.program_name, status, cost, r.stats.candidates_tried, sql
            ));
        }
        out.push_str(&format!(
            "{} benchmarks: {} synthesized, {} failed, {} errors\n",
            self.total, self.synthesized, self.failed, self.errors
        ));
        out
    }
}

/// Runs every `.qil` file in `dir`, ordered by file name.
pub fn run_benchmarks(dir: &Path, cfg: &PipelineConfig) -> std::io::Result<BenchmarkSummary> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "qil"))
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(BenchmarkSummary::from_reports(files.iter().map(|f| run_pipeline(f, cfg)).collect()))
}
