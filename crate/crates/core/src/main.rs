use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spectral_mfg::cli;

/// Spectral Picard solver and bound verifier for forward-backward mean field games.
#[derive(Debug, Parser)]
#[command(name = "spectral-mfg", version)]
struct Args {
    /// One of: solve, check-smallness, verify-bounds, continuous-dependence,
    /// weak-star, oracle-compare.
    command: String,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `[experiment] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() {
                cli::EXIT_ERROR
            } else {
                cli::EXIT_OK
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("could not size the thread pool: {e}");
            return ExitCode::from(cli::EXIT_ERROR);
        }
    }
    ExitCode::from(cli::run(&args.command, &args.config, &args.out, args.seed))
}
