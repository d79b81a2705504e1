use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hwave_core::experiments::{run_experiment, ExperimentConfig, ExperimentName};
use hwave_core::Error;

#[derive(Parser)]
#[command(name = "hwave", version, about = "Damped semilinear waves on the Heisenberg group")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver and write the diagnostic time series
    Simulate(Common),
    /// Fit decay exponents of a linear run or an existing series CSV
    Decay(Common),
    /// Small-data / large-data sweep across exponents
    Sweep(Common),
    /// Quadrature and functional-inequality probes
    Inequality(Common),
    /// Test-function functionals I_R, J_R over a list of radii
    Certificate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (falls back to HWAVE_THREADS, then all cores)
    #[arg(long, env = "HWAVE_THREADS")]
    threads: Option<usize>,
    /// Seed for randomized function families
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(name: ExperimentName, args: &Common) -> Result<i32, Error> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    if cfg.experiment.name != name {
        return Err(Error::Config(format!(
            "config describes the {} experiment, not {}",
            cfg.experiment.name.as_str(),
            name.as_str()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.experiment.seed = Some(seed);
    }
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let report = run_experiment(&cfg, &args.out_dir)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &report.checks {
        println!("{} {}: {} (target {})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.target);
    }
    println!(
        "{}: {:?} -> {}",
        report.experiment,
        report.status,
        args.out_dir.join("report.json").display()
    );
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Simulate(a) => (ExperimentName::Simulate, a),
        Command::Decay(a) => (ExperimentName::Decay, a),
        Command::Sweep(a) => (ExperimentName::Sweep, a),
        Command::Inequality(a) => (ExperimentName::Inequality, a),
        Command::Certificate(a) => (ExperimentName::Certificate, a),
    };
    match execute(name, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
