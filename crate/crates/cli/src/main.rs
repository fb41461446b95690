//! `qil`: synthesize SQL from `.qil` kernels, run the benchmark corpus and
//! replay inputs.
//!
//! Exit codes: 0 synthesized (or replay agreement), 2 synthesis failed (or
//! replay disagreement), 1 any error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qil_core::bindings::{parse_bindings, value_to_json};
use qil_core::emit::{eval_sql, parse_sql, MiniDb};
use qil_core::pipeline::{run_benchmarks, run_pipeline, PipelineConfig};
use qil_core::synth::SynthConfig;
use qil_core::verify::Bounds;
use serde_json::{json, Value as Json};

#[derive(Parser)]
#[command(name = "qil", version, about = "Synthesize order-preserving SQL from imperative loop kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize SQL for one kernel and print its JSON report.
    Synth {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run every `.qil` file in a directory; JSON summary on stdout, table on stderr.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run a kernel on JSON inputs, and the SQL of a solution if given.
    Replay {
        file: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// A report produced by `synth`, or a file holding a SQL query.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Opts {
    /// Largest candidate cost to enumerate.
    #[arg(long, default_value_t = 24)]
    cost_bound: usize,
    /// Largest relation size in the verifier's input space.
    #[arg(long, default_value_t = 3)]
    rel_bound: usize,
    /// Verifier integers range over 0..=D.
    #[arg(long, default_value_t = 2)]
    int_domain: i64,
    /// Random differential test cases per solution.
    #[arg(long, default_value_t = 1000)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock seconds per file; 0 disables the limit.
    #[arg(long, default_value_t = 120.0)]
    timeout: f64,
    /// Worker threads. Reports do not depend on this.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Include wall-clock time and thread count in reports.
    #[arg(long)]
    timing: bool,
}

impl Opts {
    fn config(&self) -> PipelineConfig {
        let bounds = Bounds { max_relation_size: self.rel_bound, int_domain: self.int_domain, ..Bounds::default() };
        PipelineConfig {
            synth: SynthConfig {
                cost_bound: self.cost_bound,
                bounds,
                timeout_seconds: (self.timeout > 0.0).then_some(self.timeout),
                jobs: self.jobs.max(1),
            },
            cases: self.cases,
            seed: self.seed,
            timing: self.timing,
            ..PipelineConfig::default()
        }
    }
}

/// Writes a line to stdout. A closed pipe (`qil synth f | head`) is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_json(v: &impl serde::Serialize) {
    emit(&serde_json::to_string_pretty(v).expect("serializable"));
}

fn replay(file: &PathBuf, input: &PathBuf, solution: Option<&PathBuf>) -> Result<i32, String> {
    let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()));
    let prog = qil_core::load(&read(file)?).map_err(|e| e.to_string())?;
    let inputs = parse_bindings(&read(input)?).map_err(|e| e.to_string())?;
    let expected = qil_core::run(&prog, &inputs).map_err(|e| e.to_string())?;
    let mut out = json!({ "interpreter": value_to_json(&expected) });
    let mut code = 0;
    if let Some(path) = solution {
        let text = read(path)?;
        let sql_text = match serde_json::from_str::<Json>(&text) {
            Ok(report) => report
                .pointer("/solution/sql")
                .and_then(Json::as_str)
                .ok_or("report has no solution")?
                .to_string(),
            Err(_) => text.trim().to_string(),
        };
        let query = parse_sql(&sql_text).map_err(|e| e.to_string())?;
        let actual = eval_sql(&query, &MiniDb::from_bindings(&inputs)).map_err(|e| e.to_string())?;
        let agree = expected.equivalent(&actual);
        out["sql"] = json!(sql_text);
        out["sqlResult"] = value_to_json(&actual);
        out["agree"] = json!(agree);
        if !agree {
            code = 2;
        }
    }
    print_json(&out);
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Synth { file, opts } => {
            let report = run_pipeline(&file, &opts.config());
            emit(&report.to_json());
            report.exit_code()
        }
        Command::Bench { dir, opts } => match run_benchmarks(&dir, &opts.config()) {
            Ok(summary) => {
                print_json(&summary);
                let _ = write!(std::io::stderr().lock(), "{}", summary.table());
                summary.exit_code()
            }
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", dir.display());
                1
            }
        },
        Command::Replay { file, input, solution } => match replay(&file, &input, solution.as_ref()) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
    };
    ExitCode::from(code as u8)
}
