use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tanaka_core::harness::{run_experiment, Experiment, ExperimentConfig, Status};
use tanaka_core::Error;

#[derive(Parser)]
#[command(
    name = "tanaka",
    version,
    about = "Monte Carlo experiments around the perturbed Tanaka equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mirror coupling of the Euler scheme across meshes
    Uniqueness(RunArgs),
    /// Total variation and identity residuals of the non-dominated pair
    Counterexample(RunArgs),
    /// Reflection map against its naive oracle, minimality and clock sync
    Reflect(RunArgs),
    /// Curved-boundary crossing bound and the ξ, ζ, J tails
    Tails(RunArgs),
    /// Excursion counts and power sums at a local-time level
    Excursions(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; its keys are applied before the flags below
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    /// Output directory for report.json and the CSV tables
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration and exit
    #[arg(long)]
    print_config: bool,
    /// Further `--key value` overrides, e.g. `--kappa 12 --mesh-list 2^-10,2^-11`;
    /// they must come after the named options above
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "OVERRIDES"
    )]
    overrides: Vec<String>,
}

fn resolve(experiment: Experiment, args: &RunArgs) -> tanaka_core::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::load(experiment, &text)?
        }
        None => ExperimentConfig::defaults(experiment),
    };
    cfg.apply_overrides(&args.overrides)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(replicas) = args.replicas {
        cfg.replicas = replicas;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Uniqueness(a) => (Experiment::Uniqueness, a),
        Command::Counterexample(a) => (Experiment::Counterexample, a),
        Command::Reflect(a) => (Experiment::Reflect, a),
        Command::Tails(a) => (Experiment::Tails, a),
        Command::Excursions(a) => (Experiment::Excursions, a),
    };
    let cfg = match resolve(experiment, args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("tanaka: {e}");
            return ExitCode::from(2);
        }
    };
    if args.print_config {
        print!("{}", cfg.to_text());
        return ExitCode::SUCCESS;
    }
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e @ Error::Config(_)) => {
            eprintln!("tanaka: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("tanaka: {experiment} failed: {e}");
            return ExitCode::from(1);
        }
    };
    for v in &report.verdicts {
        let status = match v.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Vacuous => "VACUOUS",
            Status::Descriptive => "INFO",
        };
        println!("{status:<7} {}: {}", v.name, v.detail);
    }
    println!(
        "{experiment}: {} tables in {} ({:.1}s)",
        report.files.len(),
        cfg.output_dir.display(),
        report.wall_clock_seconds
    );
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
