//! Batch front end: parses a command line, solves, and writes the solution
//! document.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use vrptw_core::solver::{self, generate_diverse, ExhaustiveOutcome};
use vrptw_core::{
    parse_native, parse_solomon, Error, ProblemInstance, SideConstraints, SolutionDocument, SolveBudget, SolveStatus,
};

pub const EXIT_SOLVED: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;

/// Default iteration limit; it binds long before the wall-time cap on
/// study-sized instances, so equal seeds give equal documents.
pub const DEFAULT_ITERATIONS: u64 = 200_000;

#[derive(Debug, Parser)]
#[command(name = "vrptw", version, about = "Solve vehicle routing problems with time windows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance and print its solution document.
    Solve(SolveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Solomon,
    Native,
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    /// Instance file; `-` reads standard input.
    pub instance: PathBuf,
    /// Input format; guessed from the content when absent.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Wall-time cap in seconds.
    #[arg(long, default_value_t = 30.0)]
    pub time: f64,
    /// Iteration limit of the search.
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: u64,
    /// Return this many mutually different solutions.
    #[arg(long, value_name = "K")]
    pub diverse: Option<usize>,
    /// Quality margin of the diverse set, as a fraction of the best objective.
    #[arg(long, default_value_t = 0.30, requires = "diverse")]
    pub margin: f64,
    /// Prove optimality by complete enumeration (small instances only).
    #[arg(long, conflicts_with = "diverse")]
    pub oracle: bool,
    /// Write the document here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// What a solve produced: the document text and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub document: Option<String>,
    pub exit: i32,
    pub note: Option<String>,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_SOLVED };
        }
    };
    let Command::Solve(args) = cli.command;
    match execute(&args) {
        Ok(report) => {
            if let Some(note) = &report.note {
                let _ = writeln!(stderr, "vrptw: {note}");
            }
            if let Some(document) = &report.document {
                if let Err(e) = emit(&args, document, stdout) {
                    let _ = writeln!(stderr, "vrptw: {e:#}");
                    return EXIT_USAGE;
                }
            }
            report.exit
        }
        Err(e) => {
            let _ = writeln!(stderr, "vrptw: {e:#}");
            EXIT_USAGE
        }
    }
}

fn emit(args: &SolveArgs, document: &str, stdout: &mut dyn Write) -> anyhow::Result<()> {
    match &args.out {
        Some(path) => std::fs::write(path, format!("{document}\n")).with_context(|| format!("cannot write {}", path.display())),
        None => writeln!(stdout, "{document}").context("cannot write standard output"),
    }
}

fn read_instance(args: &SolveArgs) -> anyhow::Result<ProblemInstance> {
    let text = if args.instance.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin()).context("cannot read standard input")?
    } else {
        std::fs::read_to_string(&args.instance).with_context(|| format!("cannot read {}", args.instance.display()))?
    };
    let format = args.format.unwrap_or_else(|| guess_format(&text));
    let parsed = match format {
        Format::Solomon => parse_solomon(&text),
        Format::Native => parse_native(&text),
    };
    parsed.with_context(|| format!("{}", args.instance.display()))
}

/// Native documents are JSON objects; anything else is read as Solomon text.
pub fn guess_format(text: &str) -> Format {
    if text.trim_start().starts_with('{') {
        Format::Native
    } else {
        Format::Solomon
    }
}

fn budget(args: &SolveArgs) -> anyhow::Result<SolveBudget> {
    let wall = Duration::try_from_secs_f64(args.time).map_err(|_| anyhow::anyhow!("--time must be a non-negative number of seconds"))?;
    Ok(SolveBudget::iterations(args.iterations, args.seed)
        .with_wall_time(wall))
}

/// Solves as the arguments ask, without touching the output streams.
pub fn execute(args: &SolveArgs) -> anyhow::Result<Report> {
    let instance = read_instance(args)?;
    let constraints = SideConstraints::new();
    let budget = budget(args)?;

    if args.oracle {
        return Ok(match solver::solve_exhaustive(&instance, &constraints)? {
            ExhaustiveOutcome::Optimal(solution) => Report {
                document: Some(SolutionDocument::new(&instance, &solution, &constraints).to_json()),
                exit: EXIT_SOLVED,
                note: None,
            },
            ExhaustiveOutcome::Unsatisfiable => Report {
                document: None,
                exit: EXIT_INFEASIBLE,
                note: Some("infeasible: no solution meets every time window".to_string()),
            },
        });
    }

    if let Some(k) = args.diverse {
        let outcome = match generate_diverse(&instance, &constraints, k, args.margin, &budget) {
            Ok(o) => o,
            Err(Error::Infeasible(witness)) => return Ok(infeasible(witness)),
            Err(e) => return Err(e.into()),
        };
        let feasible = outcome.solutions.iter().all(|s| s.is_feasible());
        let documents: Vec<SolutionDocument> = outcome
            .solutions
            .iter()
            .map(|s| SolutionDocument::new(&instance, s, &constraints))
            .collect();
        let document = json!({
            "best_objective": outcome.best_objective,
            "shortfall": outcome.shortfall,
            "solutions": documents,
        });
        return Ok(Report {
            document: Some(serde_json::to_string_pretty(&document)?),
            exit: if feasible { EXIT_SOLVED } else { EXIT_INFEASIBLE },
            note: outcome.shortfall.clone(),
        });
    }

    let start = solver::construct(&instance, &constraints, args.seed);
    let outcome = solver::improve(&instance, &constraints, &start, &budget)?;
    if outcome.status == SolveStatus::InfeasibleConstraints {
        return Ok(infeasible(outcome.message.unwrap_or_default()));
    }
    let solution = outcome.solution.unwrap_or(start);
    let feasible = solution.is_feasible();
    Ok(Report {
        document: Some(SolutionDocument::new(&instance, &solution, &constraints).to_json()),
        exit: if feasible { EXIT_SOLVED } else { EXIT_INFEASIBLE },
        note: (!feasible).then(|| "no feasible solution found; the document lists the violations".to_string()),
    })
}

fn infeasible(witness: String) -> Report {
    Report {
        document: None,
        exit: EXIT_INFEASIBLE,
        note: Some(format!("infeasible: {witness}")),
    }
}
