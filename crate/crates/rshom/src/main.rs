use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rshom::config::ExperimentConfig;
use rshom::{emit_outputs, run_experiment, HarnessError};
use rshom_core::fields::TwoScaleCoefficient;

#[derive(Parser)]
#[command(name = "rshom", version, about = "Convergence-rate experiments for two-scale Stokes homogenization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ε sweep and write rates.csv and report.txt.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated ε values replacing the configured sweep.
        #[arg(long, value_delimiter = ',')]
        eps_override: Option<Vec<f64>>,
        #[arg(long)]
        dump_fields: bool,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate the config and the coefficient's ellipticity without solving.
    Check { config: PathBuf },
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Check { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let spec = cfg.coefficient_spec()?;
            let (gy, gz) = cfg.cell_grids()?;
            let a = TwoScaleCoefficient::sample_seeded(&spec, gy, gz, cfg.seed)
                .map_err(|source| HarnessError::Stage { stage: "ellipticity", eps: None, source })?;
            let r = a.report;
            println!("config ok: {} eps values, mu = {}", cfg.eps.len(), spec.mu());
            println!("symmetric-part spectrum [{:.6e}, {:.6e}]", r.min_eig, r.max_eig);
            println!("{} random xi: Rayleigh quotients in [{:.6e}, {:.6e}]", r.samples, r.min_rayleigh, r.max_rayleigh);
            for &eps in &cfg.eps {
                println!("eps = {eps}: {} macro points per axis", cfg.macro_points(eps));
            }
            Ok(true)
        }
        Command::Run { config, out, eps_override, dump_fields, workers, seed } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(eps) = eps_override {
                cfg.eps = eps;
            }
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.output.dump_fields |= dump_fields;
            cfg.validate()?;
            let dir = cfg.output.dir.clone();
            let outcome = run_experiment(&cfg, cfg.output.dump_fields.then_some(dir.as_path()));
            emit_outputs(&outcome.report, &dir, cfg.output.timings)?;
            print!("{}", rshom::report::report_text(&outcome.report));
            if let Some(e) = outcome.error {
                return Err(e);
            }
            Ok(outcome.report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
