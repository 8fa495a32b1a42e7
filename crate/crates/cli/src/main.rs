use std::path::PathBuf;

use clap::{Parser, Subcommand};
use mias_cli::commands;
use mias_cli::{CliError, Config, ExitCode};

#[derive(Parser)]
#[command(
    name = "mias",
    version,
    about = "Movie profitability pipeline and prediction service"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed applied to every seeded stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a raw corpus and write its canonical form.
    Ingest {
        /// Raw JSONL corpus; overrides the config.
        input: Option<PathBuf>,
        /// Reject the corpus if any line is invalid.
        #[arg(long)]
        strict: bool,
    },
    /// Fit topics and build the feature matrix and labels.
    Features,
    /// Run the cross-validated experiment grid.
    Evaluate {
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Fit the serving models on all rows.
    Train,
    /// Serve predictions over HTTP.
    Serve {
        /// Address to bind; overrides the config.
        #[arg(long)]
        bind: Option<String>,
    },
    /// Write a synthetic corpus with known structure.
    MakeSynthetic,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p, ExitCode::General)?,
        None => Config::default(),
    };
    config.resolve_seed();
    if let Some(s) = cli.seed {
        config.apply_seed(s);
    }
    if cli.out.is_some() {
        config.out = cli.out;
    }
    match cli.command {
        Command::Ingest { input, strict } => {
            if input.is_some() {
                config.ingest.input = input;
            }
            config.ingest.strict |= strict;
            let s = commands::cmd_ingest(&config)?;
            println!(
                "ingested {} movies, {} persons ({} invalid lines, {} duplicates merged)",
                s.movies, s.persons, s.invalid_lines, s.duplicates_merged
            );
        }
        Command::Features => {
            let s = commands::cmd_features(&config)?;
            println!(
                "features: {} rows x {} columns, schema {}",
                s.rows, s.columns, s.schema_fingerprint
            );
        }
        Command::Evaluate { jobs } => {
            let s = commands::cmd_evaluate(&config, jobs.max(1))?;
            println!(
                "evaluated {} classification and {} regression setups ({} with cost regressions)",
                s.experiments, s.regressions, s.cost_regressions
            );
        }
        Command::Train => {
            let s = commands::cmd_train(&config)?;
            println!("trained {} on {} rows", s.classifier, s.rows);
        }
        Command::Serve { bind } => {
            if let Some(b) = bind {
                config.serve.bind = b;
            }
            let rt = tokio::runtime::Runtime::new()
                .map_err(|e| CliError::new(ExitCode::General, format!("cannot start runtime: {e}")))?;
            rt.block_on(mias_cli::server::serve(config))?;
        }
        Command::MakeSynthetic => {
            let s = commands::cmd_make_synthetic(&config)?;
            println!("wrote {} movies to {}", s.movies, s.path.display());
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
