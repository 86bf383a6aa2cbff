use std::path::PathBuf;
use std::process::ExitCode;

use aol::bounds::evaluate_queries;
use aol::harness::{
    read_summary, run_experiment, selftest::selftest, table1_report, write_outputs,
    ExperimentConfig,
};
use aol::Error;
use clap::{Parser, Subcommand};

const CONFIG_ERROR: u8 = 2;
const PARTIAL_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "aol", version, about = "Aggregation-of-leaders rate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replicated experiment and write rows.csv, summary.json, rates.svg.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the fitted slopes of a finished run next to the known rates.
    Report {
        #[arg(long = "in")]
        dir: PathBuf,
    },
    /// Evaluate bound calculators from a JSON query (object or array).
    Bounds {
        #[arg(long)]
        query: String,
    },
    /// Structural property checks and a determinism check.
    Selftest,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Invalid(_) => CONFIG_ERROR,
        _ => 1,
    }
}

fn run(config: PathBuf, out: Option<PathBuf>, jobs: Option<usize>, seed: Option<u64>) -> ExitCode {
    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => return fail(CONFIG_ERROR, format!("{}: {e}", config.display())),
    };
    let mut cfg = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => return fail(CONFIG_ERROR, e),
    };
    if jobs.is_some() {
        cfg.jobs = jobs;
    }
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Err(e) = cfg.validate() {
        return fail(CONFIG_ERROR, e);
    }
    let dir = out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(code_for(&e), e),
    };
    if let Err(e) = write_outputs(&report, &dir, true) {
        return fail(1, e);
    }
    for e in &report.summary.estimators {
        match (e.slope, e.slope_stderr) {
            (Some(s), Some(se)) => println!("{:<16} slope {s:+.3} ± {se:.3}", e.estimator),
            _ => println!("{:<16} slope —", e.estimator),
        }
    }
    println!("{} rows written to {}", report.rows.len(), dir.display());
    let failures = report.failures();
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in failures.iter().take(5) {
            eprintln!("failed: {} n={} rep={}: {}", f.estimator, f.n, f.rep, f.error);
        }
        eprintln!("{} fits failed (see summary.json)", failures.len());
        ExitCode::from(PARTIAL_FAILURE)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            jobs,
            seed,
        } => run(config, out, jobs, seed),
        Command::Report { dir } => match read_summary(&dir) {
            Ok(summary) => {
                for e in &summary.estimators {
                    let slope = e.slope.map_or("—".to_string(), |s| format!("{s:+.3}"));
                    let target = e
                        .target_exponent
                        .map_or("—".to_string(), |t| format!("{t:+.3}"));
                    println!("{:<16} slope {slope} target {target}", e.estimator);
                }
                print!("{}", table1_report(&[summary]).to_text());
                ExitCode::SUCCESS
            }
            Err(e) => fail(code_for(&e), e),
        },
        Command::Bounds { query } => {
            let parsed: serde_json::Value = match serde_json::from_str(&query) {
                Ok(v) => v,
                Err(e) => return fail(CONFIG_ERROR, format!("query: {e}")),
            };
            match evaluate_queries(&parsed) {
                Ok(v) => {
                    println!("{}", serde_json::to_string_pretty(&v).expect("json values serialize"));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(CONFIG_ERROR, e),
            }
        }
        Command::Selftest => {
            let checks = selftest();
            for c in &checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                println!("{mark} {} {}", c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(PARTIAL_FAILURE)
            }
        }
    }
}
