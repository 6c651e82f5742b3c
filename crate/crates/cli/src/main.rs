mod commands;
mod figures;
mod model_io;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "anchortalk", version, about = "Equilibria of cheap talk with a noisy public anchor")]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "ANCHORTALK_OUT_DIR", default_value = "anchortalk_out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form Gaussian-quadratic equilibrium and a bias sweep.
    #[command(allow_negative_numbers = true)]
    Gauss(commands::GaussArgs),
    /// Data behind the figures, one CSV per panel.
    Figure {
        #[command(subcommand)]
        which: figures::Figure,
    },
    /// Regular equilibrium of a model file.
    Solve(commands::SolveArgs),
    /// Monte Carlo diagnostics of the model's equilibrium; exit 4 on failure.
    Verify(commands::VerifyArgs),
    /// Critical distortion cost for an uninformative anchor.
    Sturm(commands::SturmArgs),
    /// Hybrid equilibrium: labels, then anchored reports.
    Hybrid(commands::HybridArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out_dir.as_path();
    let res = match &cli.command {
        Command::Gauss(a) => commands::gauss(a, out),
        Command::Figure { which } => figures::run(which, out),
        Command::Solve(a) => commands::solve(a, out),
        Command::Verify(a) => commands::verify(a, out),
        Command::Sturm(a) => commands::sturm(a, out),
        Command::Hybrid(a) => commands::hybrid(a, out),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if let Some(u) = e.downcast_ref::<model_io::UsageError>() {
                eprintln!("error: {u}");
                return ExitCode::from(2);
            }
            if let Some(se) = e.downcast_ref::<anchortalk::Error>() {
                eprintln!("error: {}: {e:#}", se.kind());
                return match se {
                    anchortalk::Error::InvalidModel(_) => ExitCode::from(2),
                    _ => ExitCode::from(3),
                };
            }
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
