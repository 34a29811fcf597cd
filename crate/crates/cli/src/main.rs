//! Command-line driver: `psa-chroma <command> --config run.json [--out DIR]`.
//!
//! Exit status 0 on success, 1 on input errors, 2 when the run itself detects a
//! broken invariant (the evidence is printed as JSON and saved as `violation.json`).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;
use config::{parse_list, parse_config, RunConfig, Slices};
use output::Sink;

#[derive(Parser)]
#[command(name = "psa-chroma", version, about = "Solvers for isothermal two-species adsorption chromatography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solves one Riemann problem and samples its fan.
    Riemann(Common),
    /// Front tracking with interaction ledger and BV report.
    Simulate(Common),
    /// Method of characteristics for Lipschitz data.
    Smooth(Common),
    /// Godunov finite volumes marching in x.
    Godunov(Common),
    /// Convergence experiments.
    Experiment {
        #[command(subcommand)]
        kind: Experiment,
    },
    /// Checks the structural assumptions of an isotherm model.
    ValidateModel(Common),
}

#[derive(Subcommand)]
enum Experiment {
    /// Boundary velocity oscillating on the scale ε.
    Oscillation(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV, JSON and JSONL outputs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `solver.delta`.
    #[arg(long)]
    delta: Option<f64>,
    /// Overrides `experiment.eps`, e.g. `0.1,0.05,0.025`.
    #[arg(long)]
    eps_list: Option<String>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.slices`, e.g. `x=0.5,1;t=0.25`.
    #[arg(long)]
    slices: Option<String>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, Failure> {
        let text = std::fs::read_to_string(&self.config)
            .map_err(|e| Failure::Input(format!("cannot read {}: {e}", self.config.display())))?;
        let mut cfg = parse_config(&text).map_err(|e| Failure::Input(e.to_string()))?;
        if let Some(d) = self.delta {
            cfg.solver.delta = d;
        }
        if let Some(list) = &self.eps_list {
            let eps = parse_list(list).map_err(|e| Failure::Input(format!("--eps-list: {e}")))?;
            match cfg.experiment.as_mut() {
                Some(e) => e.eps = eps,
                None => return Err(Failure::Input("--eps-list needs an `experiment` block".into())),
            }
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(spec) = &self.slices {
            cfg.output.slices = Slices::parse(spec).map_err(|e| Failure::Input(format!("--slices: {e}")))?;
        }
        cfg.validate().map_err(|e| Failure::Input(e.to_string()))?;
        Ok(cfg)
    }
}

type Handler = fn(&RunConfig, &Sink) -> Result<(), Failure>;

fn run(cli: Cli) -> Result<(), Failure> {
    let (common, command): (&Common, Handler) = match &cli.command {
        Command::Riemann(c) => (c, commands::riemann),
        Command::Simulate(c) => (c, commands::simulate),
        Command::Smooth(c) => (c, commands::smooth),
        Command::Godunov(c) => (c, commands::godunov),
        Command::Experiment { kind: Experiment::Oscillation(c) } => (c, commands::oscillation),
        Command::ValidateModel(c) => (c, commands::validate),
    };
    let cfg = common.load()?;
    let sink = Sink::new(common.out.clone())?;
    match command(&cfg, &sink) {
        Err(Failure::Violation { message, report }) => {
            let text = output::json(&report);
            sink.report("violation.json", &text)?;
            Err(Failure::Violation { message, report })
        }
        other => other,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Violation { message, .. }) => {
            eprintln!("invariant violated: {message}");
            ExitCode::from(2)
        }
    }
}
