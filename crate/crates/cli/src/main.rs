//! `drt`: doubly ranked tests for grouped functional data, and the Monte
//! Carlo experiments that calibrate them.
//!
//! Exit codes: 0 success (whatever the p-value), 2 usage or input error,
//! 1 internal error.

mod experiment;
mod input;
mod report;

use std::fmt;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use drt_core::preprocess::fpca_smooth;
use drt_core::rank_tests::{DoublyRankedConfig, DEFAULT_EXACT_THRESHOLD};
use drt_core::{doubly_ranked_test, Alternative, SummaryKind};

use experiment::{GridArgs, PowerArgs, SimulateArgs};
use input::Layout;
use report::{JsonReport, PreprocessReport, SCHEMA_VERSION};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input, invalid grids.
    Input(String),
    /// Anything else: failures writing output, broken invariants.
    Internal(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<drt_core::Error> for CliError {
    fn from(e: drt_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// FPCA setting from `none` or `pve=<p>` with `0 < p ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preprocess(pub Option<f64>);

pub fn parse_preprocess(s: &str) -> Result<Preprocess, String> {
    if s == "none" {
        return Ok(Preprocess(None));
    }
    let p = s
        .strip_prefix("pve=")
        .and_then(|p| p.parse::<f64>().ok())
        .ok_or_else(|| format!("expected 'none' or 'pve=<p>', got '{s}'"))?;
    if p > 0.0 && p <= 1.0 {
        Ok(Preprocess(Some(p)))
    } else {
        Err(format!("pve must be in (0, 1], got {p}"))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "drt",
    version,
    about = "Doubly ranked rank tests for grouped functional data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test whether groups of curves come from the same distribution
    Test(TestArgs),
    /// Estimate type-I error rates by simulation (ξ = 0)
    Type1(GridArgs),
    /// Estimate power curves over shift sizes ξ
    Power(PowerArgs),
    /// Write one simulated data set as CSV
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(clap::Args, Debug)]
struct TestArgs {
    /// CSV file, wide (id,group,v1..vS) or long (id,group,s,value); '-' reads stdin
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Layout::Auto)]
    layout: Layout,
    /// suff (sufficient statistic) or avg (average rank)
    #[arg(long, default_value = "suff")]
    summary: SummaryKind,
    /// none | pve=<p>: FPCA smoothing before ranking
    #[arg(long, default_value = "pve=0.99", value_parser = parse_preprocess)]
    preprocess: Preprocess,
    /// two-sided | less | greater (two groups only; greater = group 2 shifted up)
    #[arg(long, default_value = "two-sided")]
    alternative: Alternative,
    /// Largest combined sample size using the exact MWW null
    #[arg(long, default_value_t = DEFAULT_EXACT_THRESHOLD)]
    exact_threshold: usize,
    /// Disable the continuity correction of the MWW normal approximation
    #[arg(long)]
    no_continuity_correction: bool,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

fn cmd_test(args: TestArgs) -> Result<(), CliError> {
    let source = args.input.display().to_string();
    let table = if source == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::Input(format!("reading stdin: {e}")))?;
        input::read_table(text.as_bytes(), "<stdin>", args.layout)?
    } else {
        let file = std::fs::File::open(&args.input)
            .map_err(|e| CliError::Input(format!("{source}: {e}")))?;
        input::read_table(file, &source, args.layout)?
    };
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }

    let config = DoublyRankedConfig {
        summary: args.summary,
        preprocess: None,
        alternative: args.alternative,
        exact_threshold: args.exact_threshold,
        continuity_correction: !args.no_continuity_correction,
    };
    // Smoothing here rather than through `config.preprocess` gives the same
    // result and exposes the retained component count for the report.
    let (curves, preprocess) = match args.preprocess.0 {
        Some(pve) => {
            let fit = fpca_smooth(&table.curves, pve)?;
            let pre = PreprocessReport {
                pve: Some(pve),
                components_kept: Some(fit.components_kept),
                pve_achieved: Some(fit.pve_achieved),
            };
            (fit.into_curves(&table.curves)?, pre)
        }
        None => (
            table.curves.clone(),
            PreprocessReport {
                pve: None,
                components_kept: None,
                pve_achieved: None,
            },
        ),
    };
    let result = doubly_ranked_test(&curves, &config)?;
    let report = JsonReport {
        schema_version: SCHEMA_VERSION,
        statistic_name: report::statistic_name(result.method),
        result: &result,
        group_labels: &table.labels,
        summary: args.summary,
        preprocess,
        subjects: curves.n(),
        occasions: curves.grid_len(),
    };
    let text = match args.format {
        ReportFormat::Text => report::render_text(&report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Internal(format!("serializing report: {e}")))?;
            s.push('\n');
            s
        }
    };
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Type1(a) => experiment::cmd_type1(a),
        Command::Power(a) => experiment::cmd_power(a),
        Command::Simulate(a) => experiment::cmd_simulate(a),
    });
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e @ CliError::Input(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Ok(Err(e @ CliError::Internal(_))) => {
            eprintln!("internal error: {e}");
            ExitCode::from(1)
        }
        // the panic hook has already printed the message
        Err(_) => ExitCode::from(1),
    }
}
