use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lightfluct::analyzers::{audit_classical_bounds, CorrelationSeries, Normalization};
use lightfluct::blackbody::{moments, sample_energy, sample_moments, EnergyModel, ThermalParameter};
use lightfluct::numerics::RngStream;
use lightfluct_cli::analyze::{analyze_and_write, Overrides};
use lightfluct_cli::compare::compare;
use lightfluct_cli::config::{ExperimentConfig, OUTPUT_DIR_ENV};
use lightfluct_cli::error::{CliError, CliResult};
use lightfluct_cli::manifest::write_artifact;
use lightfluct_cli::run::run;
use serde_json::json;

#[derive(Parser)]
#[command(name = "lightfluct", version, about = "Classical and quantum light-fluctuation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic and sampled moments of a thermal oscillator's energy.
    Blackbody {
        /// Dimensionless hν/kT.
        #[arg(long)]
        x: f64,
        #[arg(long, alias = "samples", default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Generate records for an experiment configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run directory.
        #[arg(long, env = OUTPUT_DIR_ENV)]
        out: PathBuf,
        /// Overrides the config and LIGHTFLUCT_SEED.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate g², h and the squeezing spectrum of a run directory.
    Analyze {
        dir: PathBuf,
        #[arg(long)]
        bin_width: Option<f64>,
        #[arg(long)]
        max_lag: Option<f64>,
        #[arg(long)]
        halfwidth: Option<f64>,
    },
    /// Align the estimates of two analyzed run directories.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Directory for comparison.json and comparison_h.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check g² (and optionally h) CSV files against the classical bounds.
    Audit {
        #[arg(long)]
        g2: PathBuf,
        #[arg(long)]
        h: Option<PathBuf>,
    },
}

fn print(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializes"));
}

fn read_series(path: &Path, norm: Normalization) -> CliResult<CorrelationSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    CorrelationSeries::from_csv(&text, norm).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn blackbody(x: f64, n: usize, seed: u64) -> CliResult<()> {
    let x = ThermalParameter::new(x).map_err(|e| CliError::Config(e.to_string()))?;
    if n < 2 {
        return Err(CliError::Config("--n must be at least 2".into()));
    }
    let sampled = |model, id| -> CliResult<_> {
        let mut stream = RngStream::new(seed, id);
        Ok(sample_moments(&sample_energy(x, model, n, &mut stream)?))
    };
    print(&json!({
        "x": x.value(),
        "analytic_continuous": moments(x, EnergyModel::Continuous),
        "analytic_discrete": moments(x, EnergyModel::Discrete),
        "sampled_continuous": sampled(EnergyModel::Continuous, 0)?,
        "sampled_discrete": sampled(EnergyModel::Discrete, 1)?,
    }));
    Ok(())
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Blackbody { x, n, seed } => blackbody(x, n, seed),
        Command::Run { config, out, seed } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.run.seed = s;
            }
            let m = run(&cfg, &out)?;
            print(&json!({
                "dir": out.display().to_string(),
                "engine": m.engine,
                "config_hash": m.config_hash,
                "seed": m.seed,
                "records": m.records.len(),
                "wall_clock_seconds": m.wall_clock_seconds,
            }));
            Ok(())
        }
        Command::Analyze { dir, bin_width, max_lag, halfwidth } => {
            let an = analyze_and_write(&dir, Overrides { bin_width, max_lag, halfwidth })?;
            print(&an.report);
            if an.problems.is_empty() {
                Ok(())
            } else {
                Err(CliError::Inconclusive(an.problems.join("; ")))
            }
        }
        Command::Compare { a, b, out } => {
            let c = compare(&a, &b)?;
            if let Some(out) = out {
                write_artifact(&out, "comparison.json", &(serde_json::to_string_pretty(&c).expect("serializes") + "\n"))?;
                write_artifact(&out, "comparison_h.csv", &c.table)?;
            }
            print(&c);
            Ok(())
        }
        Command::Audit { g2, h } => {
            let g2 = read_series(&g2, Normalization::G2)?;
            let h = h.map(|p| read_series(&p, Normalization::H)).transpose()?;
            let report = audit_classical_bounds(&g2, h.as_ref());
            print(&report);
            if report.any_inconclusive() {
                Err(CliError::Inconclusive("some checks are inconclusive".into()))
            } else {
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lightfluct: {e}");
            e.exit_code()
        }
    }
}
