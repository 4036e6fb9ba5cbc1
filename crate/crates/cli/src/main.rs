use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use holoball::{execute, Command, RunError};

/// Batch experiments on the unit ball: geometry self-tests, lattices,
/// Carleson criteria and composition-operator differences.
#[derive(Parser, Debug)]
#[command(name = "holoball", version)]
struct Cli {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `output`, else ./holoball-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn threads() -> Result<Option<usize>, RunError> {
    match std::env::var("HOLOBALL_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(RunError::validation(
                "HOLOBALL_THREADS",
                format!("expected a positive integer, got {v:?}"),
            )),
        },
    }
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("{}", e.record());
    ExitCode::from(e.kind.exit_code() as u8)
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
    match threads() {
        Ok(Some(k)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
            {
                return fail(RunError::runtime("threads", e));
            }
        }
        Ok(None) => {}
        Err(e) => return fail(e),
    }
    match execute(cli.command, &cli.config, cli.out.as_deref(), cli.seed) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
