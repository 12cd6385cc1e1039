//! Experiment orchestration: config parsing, the p-ladder and output files.

mod config;
mod output;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, SeedKind};
pub use output::{diagnostics_csv, emit_outputs, Manifest, ManifestEntry};
pub use run::{
    run_experiment, LadderEntry, LimitEstimate, LimitFieldReport, RefinementRow, Report,
    SeedEnergy, SolutionChecks, StationarityReport,
};
pub use verify::{
    disk_green_asymmetry, disk_lambda1, poisson_manufactured_error, run_verify, OracleCheck, J01,
};

use crate::geometry::{build_grid, DomainSpec};
use crate::greens::{solve_stationarity, GreenKernel, StationarityConvention};

#[derive(Parser, Debug)]
#[command(name = "nodal-lab", version, about = "Least-energy nodal solutions of the planar Lane-Emden problem")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the p-ladder described by a JSON config and write all outputs.
    ///
    /// Config keys (defaults in brackets): domain [unit_disk], n [513],
    /// refinement [[]], p_ladder (required), seeds [["antisymmetric"]],
    /// tol_solve [1e-8], tol_nehari [1e-10], max_iters [2000],
    /// newton_switch [1e-3], profile_radius [4], exclusion [0.2],
    /// p_fit_min [6], output_dir ["out"], stationarity_convention
    /// ["first_slot" | "robin_gradient"], stationarity_init
    /// [[[0.3,0],[-0.3,0]]], dump_fields [true].
    Run {
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the analytic oracle self-checks.
    Verify,
    /// Solve only the two-point stationarity system.
    Stationarity {
        /// `unit_disk` or a path to a JSON domain description.
        domain: String,
        /// Grid size for numeric Green's functions.
        #[arg(long, default_value_t = 257)]
        n: usize,
        #[arg(long, value_enum, default_value_t = ConventionArg::FirstSlot)]
        convention: ConventionArg,
        /// Initial x⁺ and x⁻ as four numbers.
        #[arg(long, num_args = 4, allow_negative_numbers = true, default_values_t = [0.3, 0.0, -0.3, 0.0])]
        init: Vec<f64>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum ConventionArg {
    FirstSlot,
    RobinGradient,
}

impl From<ConventionArg> for StationarityConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::FirstSlot => StationarityConvention::FirstSlot,
            ConventionArg::RobinGradient => StationarityConvention::RobinGradient,
        }
    }
}

pub fn run_cli(cli: Cli) -> ExitCode {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> crate::Result<ExitCode> {
    match cli.command {
        Command::Run { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let report = run_experiment(&cfg)?;
            let manifest = emit_outputs(&report, Some(&cfg), &cfg.output_dir)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", diagnostics_csv(&report).trim_end());
            println!("wrote {} files to {}", manifest.files.len() + 1, cfg.output_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify => {
            let checks = run_verify()?;
            let mut ok = true;
            for c in &checks {
                println!("{} {} value={:e} tolerance={:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
                ok &= c.pass;
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Stationarity { domain, n, convention, init } => {
            let spec = if domain == "unit_disk" {
                DomainSpec::UnitDisk
            } else {
                let text = std::fs::read_to_string(&domain).map_err(|e| crate::Error::io(&domain, e))?;
                serde_json::from_str(&text)?
            };
            let grid = build_grid(spec, n)?;
            let kernel = GreenKernel::for_grid(&grid);
            let pair = solve_stationarity(&kernel, ([init[0], init[1]], [init[2], init[3]]), convention.into(), 1e-10)?;
            println!("{}", serde_json::to_string_pretty(&pair)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
