use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nls_surgery::config::{ExperimentId, RunConfig};
use nls_surgery::diagnostics::{classify_mass_trace, MassTrace};
use nls_surgery::experiments::{emit_outputs, run_experiment};
use nls_surgery::ground_state::{save_cache, solve_ground_state};
use nls_surgery::{Error, RadialGrid};

/// Radial mass-critical NLS laboratory: solver, surgery and diagnostics.
#[derive(Parser)]
#[command(name = "nls-surgery", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one of the canned experiments e1..e5.
    Run {
        experiment: ExperimentId,
        /// TOML file overriding the experiment defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Further `key=value` overrides, applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Print the resolved configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Solve for the ground state and write its profile as CSV.
    Groundstate {
        #[arg(long, default_value_t = 5)]
        d: usize,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = 30.0)]
        r_max: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify a mass trace CSV (columns `t` and `mass` at least).
    Classify {
        trace: PathBuf,
        /// Reference time for the one-sided continuity test.
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        /// Jump threshold relative to the largest mass in the trace.
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
    },
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

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run { experiment, config, set, print_config } => {
            let cfg = RunConfig::assemble(experiment, config.as_deref(), &set)?.with_env_output_dir();
            if print_config {
                print!("{}", cfg.to_toml()?);
                return Ok(true);
            }
            let out = run_experiment(&cfg)?;
            let dir = cfg.output_dir.join(experiment.as_str());
            let files = emit_outputs(&out, &dir)?;
            for c in &out.report.checks {
                println!(
                    "[{}] criterion {:>2} {:<40} {:>12.6e}  ({})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.criterion,
                    c.name,
                    c.value,
                    c.requirement
                );
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            println!("{experiment}: {}", if out.report.passed { "PASS" } else { "FAIL" });
            Ok(out.report.passed)
        }
        Command::Groundstate { d, n, r_max, tol, out } => {
            let grid = RadialGrid::new(d, n, r_max)?;
            let gs = solve_ground_state(&grid, tol)?;
            save_cache(&gs, &out)?;
            println!(
                "Q(0) = {:.10}  M(Q) = {:.10}  residual = {:.3e}  iterations = {}",
                gs.peak, gs.mass, gs.residual, gs.iterations
            );
            Ok(true)
        }
        Command::Classify { trace, t0, eps } => {
            let file = std::fs::File::open(&trace)?;
            let trace = MassTrace::read_csv(std::io::BufReader::new(file))?;
            let scale = trace.masses.iter().copied().fold(0.0, f64::max);
            let threshold = if scale > 0.0 { eps * scale } else { eps };
            let report = classify_mass_trace(&trace, t0, threshold)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(true)
        }
    }
}
