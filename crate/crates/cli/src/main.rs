mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skilldecomp_core::DatasetError;

#[derive(Parser)]
#[command(name = "skilldecomp", version, about = "Decompose match outcomes into player and champion skill")]
struct Cli {
    /// Worker threads for cross-validation (default: available cores).
    #[arg(long, global = true, env = "SKILLDECOMP_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate raw match records and build an indexed dataset.
    Ingest(commands::IngestArgs),
    /// Dump the sparse encoding of every match.
    Featurize(commands::FeaturizeArgs),
    /// Cross-validate the configured models and write a comparison report.
    Evaluate(config::EvaluateArgs),
    /// Put several reports side by side and re-run the verdict.
    Compare(commands::CompareArgs),
    /// Generate matches from known skills.
    Synth(commands::SynthArgs),
    /// Hide a fraction of players behind one shared anonymous identity.
    Anonymize(commands::AnonymizeArgs),
    /// Rate players chronologically and score the hold-out matches.
    Trueskill(commands::TrueSkillArgs),
}

/// 2 for records rejected by strict validation, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<DatasetError>() {
        Some(DatasetError::Io(_)) | None => 1,
        Some(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Featurize(a) => commands::featurize(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Compare(a) => commands::compare(a),
        Command::Synth(a) => commands::synth(a),
        Command::Anonymize(a) => commands::anonymize(a),
        Command::Trueskill(a) => commands::trueskill(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
