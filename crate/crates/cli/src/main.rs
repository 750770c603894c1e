use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use perfband_cli::{run, Command, RunConfig};

/// Floquet bands of a perforated waveguide cell.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let outcome = RunConfig::load(&args.config)
        .map_err(Into::into)
        .and_then(|cfg| run(args.command, &cfg));
    match outcome {
        Ok(art) => {
            for p in &art.written {
                println!("{}", p.display());
            }
            if !art.cache_hits.is_empty() {
                eprintln!(
                    "{}: {} artifact(s) read from cache",
                    args.command.name(),
                    art.cache_hits.len()
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
