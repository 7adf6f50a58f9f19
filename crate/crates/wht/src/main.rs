use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wht::commands::{self, Options};
use wht::config::RunConfig;
use wht::CliError;

#[derive(Parser)]
#[command(name = "wht", version, about = "Weighted Hurwitz numbers: tables, curves and recursion checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate Hurwitz counts
    Table(Args),
    /// Run the verification suites
    Verify(Args),
    /// Export the spectral curve
    Curve(Args),
    /// Run topological recursion and compare with the tables
    Tr(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run independent work concurrently (capped by WHT_THREADS)
    #[arg(long)]
    parallel: bool,
}

type Handler = fn(&RunConfig, &Options) -> Result<i32, CliError>;

fn run(cli: Cli) -> Result<i32, CliError> {
    let (args, f): (&Args, Handler) = match &cli.cmd {
        Cmd::Table(a) => (a, commands::table),
        Cmd::Verify(a) => (a, commands::verify),
        Cmd::Curve(a) => (a, commands::curve),
        Cmd::Tr(a) => (a, commands::tr),
    };
    let cfg = RunConfig::load(&args.config)?;
    let opts = Options { out: args.out.clone(), parallel: args.parallel };
    let threads = match std::env::var("WHT_THREADS") {
        Ok(v) => Some(v.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Config(format!("WHT_THREADS must be a positive integer, got {v:?}"))
        })?),
        Err(_) => None,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| f(&cfg, &opts))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("wht: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
