use std::path::PathBuf;
use std::process::ExitCode;

use attrbounds_cli::{run, CliError, ConfigText, ExperimentConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "attrbounds", version, about = "Attractor-dimension bounds for Allen-Cahn equations with singular potentials")]
struct Cli {
    #[command(subcommand)]
    task: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Volume, moment of inertia and ratio of the discretized domain
    Geometry,
    /// Lowest eigenvalues of the discrete Schrödinger operator
    Spectrum,
    /// Eigenvalue-sum lower bounds against the computed spectrum
    Verify,
    /// Closed-form attractor-dimension bound
    Bounds,
    /// One trajectory with an m-dimensional tangent bundle
    Simulate,
    /// Per-direction growth rates over several seeds
    Lyapunov,
    /// Bounds over a grid of one or two parameters
    Sweep,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps
    #[arg(long, global = true, env = "ATTRBOUNDS_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
    /// Override a configuration key, e.g. --set params.nu=0.1
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn task_name(c: Command) -> &'static str {
    match c {
        Command::Geometry => "geometry",
        Command::Spectrum => "spectrum",
        Command::Verify => "verify",
        Command::Bounds => "bounds",
        Command::Simulate => "simulate",
        Command::Lyapunov => "lyapunov",
        Command::Sweep => "sweep",
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    let mut text = match &c.config {
        Some(path) => {
            let raw = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            ConfigText::parse(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => ConfigText::default(),
    };
    text.set("task", task_name(cli.task))?;
    for pair in &c.set {
        text.set_pair(pair)?;
    }
    if let Some(seed) = c.seed {
        text.set("run.seed", seed.to_string())?;
    }
    if let Some(out) = &c.out {
        text.set("output.dir", out.display().to_string())?;
    }
    if let Some(f) = c.format {
        text.set("output.format", if matches!(f, OutFormat::Csv) { "csv" } else { "json" })?;
    }
    let cfg = ExperimentConfig::from_text(&text)?;
    let threads = c
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let summary = run(&cfg, &text, threads)?;
    for p in &summary.written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
