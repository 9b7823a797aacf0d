use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use maxhom::harness::{run, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "maxhom", version, about = "Homogenization of multiscale Maxwell wave problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; overrides `output.workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Relative solver tolerance; overrides `solver.rel_tol`.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the cell problems and write the homogenized tensors.
    Homogenize(Common),
    /// Run the homogenized and/or fine wave problem.
    Simulate(Common),
    /// Corrector errors over the ε list with a fitted log-log slope.
    Sweep(Common),
}

const VALIDATION: u8 = 2;
const NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Homogenize(a) => (Mode::Homogenize, a),
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Sweep(a) => (Mode::Sweep, a),
    };
    let mut config = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(VALIDATION);
        }
    };
    if let Some(m) = config.mode {
        if m != mode {
            eprintln!("error: configuration declares mode {m:?} but the {mode:?} command was given");
            return ExitCode::from(VALIDATION);
        }
    }
    config.mode = Some(mode);
    if let Some(w) = args.workers {
        config.output.workers = w;
    }
    if let Some(t) = args.tol {
        config.solver.rel_tol = t;
    }
    match run(&config, &args.out) {
        Ok(outcome) => {
            if let Some(r) = &outcome.report {
                match r.slope {
                    Some(s) => log::info!("fitted slope {s:.4}"),
                    None => log::warn!("no slope: fewer than two completed runs"),
                }
            }
            if outcome.partial() {
                eprintln!("error: sweep incomplete; see manifest.txt");
                return ExitCode::from(NUMERICAL);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { VALIDATION } else { NUMERICAL })
        }
    }
}
