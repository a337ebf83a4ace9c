use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gyroless::harness::output::write_json;
use gyroless::harness::run::{
    pe_report, resolve_window, write_observe, write_simulation, write_sweep,
};
use gyroless::harness::{
    bundled_names, decay_scenario, gain_sweep, observe_scenario, simulate_scenario, Scenario,
};
use gyroless::{Error, Result};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

/// Angular velocity estimation from a single direction sensor: simulation,
/// observer runs and excitation checks.
#[derive(Parser)]
#[command(name = "gyroless", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file, or the name of a bundled scenario.
    #[arg(long)]
    scenario: String,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Overrides the sensor seed in the scenario.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the body and write trajectory and measurement CSVs.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Add measurement noise.
        #[arg(long)]
        noise: bool,
    },
    /// Simulate, run the observer and write all run files.
    Observe {
        #[command(flatten)]
        common: Common,
        /// Observer gain; defaults to the scenario's.
        #[arg(long)]
        k: Option<f64>,
        /// Add measurement noise.
        #[arg(long)]
        noise: bool,
    },
    /// Evaluate the excitation margin and the predicted verdict.
    PeCheck {
        #[command(flatten)]
        common: Common,
        /// Window length in seconds.
        #[arg(long = "T")]
        window: Option<f64>,
    },
    /// Run the observer for several gains concurrently.
    GainSweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated gains, e.g. "0.2,1,5".
        #[arg(long = "k-list")]
        k_list: String,
        /// Add measurement noise.
        #[arg(long)]
        noise: bool,
    },
    /// Estimate the window decay constant and the convergence budget.
    EstimateDecay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: f64,
        /// Window length in seconds.
        #[arg(long = "T")]
        window: f64,
    },
    /// List the bundled scenarios.
    Scenarios,
}

fn load(common: &Common) -> Result<Scenario> {
    let path = Path::new(&common.scenario);
    let scenario = if path.exists() {
        Scenario::from_path(path)?
    } else if bundled_names().any(|n| n == common.scenario) {
        Scenario::bundled(&common.scenario)?
    } else {
        return Err(Error::InvalidInput(format!(
            "`{}` is neither a file nor a bundled scenario",
            common.scenario
        )));
    };
    Ok(match common.seed {
        Some(seed) => scenario.with_seed(seed),
        None => scenario,
    })
}

fn parse_gains(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("bad gain `{s}`: {e}")))
        })
        .collect()
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { common, noise } => {
            let scenario = load(&common)?;
            let scenario = if noise {
                scenario.with_noise(true)
            } else {
                scenario
            };
            let (trajectory, series) = simulate_scenario(&scenario)?;
            write_simulation(&common.out, &trajectory, &series)?;
        }
        Command::Observe { common, k, noise } => {
            let mut scenario = load(&common)?;
            if let Some(k) = k {
                scenario = scenario.with_gain(k)?;
            }
            if noise {
                scenario = scenario.with_noise(true);
            }
            let outcome = observe_scenario(&scenario)?;
            write_observe(&common.out, &outcome)?;
            let e = &outcome.summary.errors;
            println!(
                "final |ω̃| = {:e} rad/s ({:e} of |ω(0)|), steady-state RMS relative error {:e}",
                e.final_omega_error, e.final_relative_error, e.steady_state_rms_relative_error
            );
        }
        Command::PeCheck { common, window } => {
            let scenario = load(&common)?;
            let (trajectory, _) = simulate_scenario(&scenario)?;
            let window = resolve_window(&scenario, &trajectory, window).ok_or_else(|| {
                Error::InvalidInput("no default window for this trajectory; pass --T".into())
            })?;
            let report = pe_report(&scenario, &trajectory, window)?;
            std::fs::create_dir_all(&common.out)?;
            write_json(&common.out.join("pe_report.json"), &report)?;
            let predicted = report
                .predicted
                .as_ref()
                .map_or("none (torqued body)", |p| p.verdict().label());
            println!(
                "T = {} s, mu = {:e}: {} (predicted {predicted})",
                report.window,
                report.mu_empirical,
                report.verdict.label()
            );
        }
        Command::GainSweep {
            common,
            k_list,
            noise,
        } => {
            let scenario = load(&common)?;
            let scenario = if noise {
                scenario.with_noise(true)
            } else {
                scenario
            };
            let gains = parse_gains(&k_list)?;
            let outcome = gain_sweep(&scenario, &gains)?;
            for k in &outcome.duplicates {
                eprintln!("warning: duplicate gain {k} ignored");
            }
            write_sweep(&common.out, &outcome)?;
        }
        Command::EstimateDecay { common, k, window } => {
            let scenario = load(&common)?;
            let outcome = decay_scenario(&scenario, k, window)?;
            std::fs::create_dir_all(&common.out)?;
            write_json(&common.out.join("decay.json"), &outcome)?;
            println!(
                "c_hat = {:e} over {} windows",
                outcome.decay.c_hat, outcome.decay.windows_checked
            );
        }
        Command::Scenarios => {
            for name in bundled_names() {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NumericFailure(_) => ExitCode::from(EXIT_NUMERIC),
                _ => ExitCode::from(EXIT_INPUT),
            }
        }
    }
}
