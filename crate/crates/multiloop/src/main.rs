//! Command-line front end; all logic lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use multiloop::harness::{
    self, AlgoConfig, Algorithm, CalibrationOutcome, ExperimentSpec, HarnessError,
    TuningConfigFile, DEFAULT_EVAL_BUDGET,
};
use multiloop::objective::CostWeights;
use multiloop::pid::ControllerSet;
use multiloop::process::TitoProcess;
use multiloop::sim::SimConfig;

#[derive(Parser)]
#[command(
    name = "multiloop",
    about = "Tune decentralized multiloop PID controllers for dead-time multivariable plants",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a plant's relative gain array and pairing recommendation
    Rga {
        /// Benchmark name (wb, vl, ww, or) or path to a plant TOML file
        process: String,
    },
    /// Simulate a plant under given PID gains and export the trajectory CSV
    Simulate {
        process: String,
        /// Gains: inline `kp1,ki1,kd1,kp2,...`, a TOML file, or `ref:<algo>`
        #[arg(long)]
        gains: String,
        /// Integration step override
        #[arg(long)]
        dt: Option<f64>,
        /// Simulation horizon override
        #[arg(long)]
        horizon: Option<f64>,
        /// Trajectory CSV path (default `<process>_trajectory.csv`)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tune a plant's controllers with one algorithm over seeded runs
    Tune {
        process: String,
        /// Algorithm: ga, es or ca
        #[arg(long)]
        algo: String,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        /// Base seed; run i uses seed + i
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// TOML file with [ga]/[es]/[ca] sections overriding the defaults
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Directory for the experiment audit trail
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
    },
    /// Find the simulation horizon at which a gain set's J matches a target
    Calibrate {
        process: String,
        #[arg(long)]
        gains: String,
        #[arg(long = "target-j")]
        target_j: f64,
        /// Horizon search range as `low:high`
        #[arg(long)]
        range: String,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Tune every benchmark with every algorithm and print the comparison
    BenchAll {
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
        /// Also repeat the wb experiment this many times and tabulate
        /// which algorithm wins on mean and std
        #[arg(long, default_value_t = 0)]
        trend: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Load a benchmark by name or a custom plant from a TOML file.
fn load_process(spec: &str) -> Result<TitoProcess, HarnessError> {
    if TitoProcess::benchmark_names().contains(&spec.to_ascii_lowercase().as_str()) {
        return Ok(TitoProcess::benchmark(spec)?);
    }
    if std::path::Path::new(spec).exists() {
        return Ok(TitoProcess::from_path(spec)?);
    }
    Ok(TitoProcess::benchmark(spec)?) // yields the unknown-name error
}

/// Parse `ref:<algo>`, an inline float list, or a gains TOML file.
fn parse_gains(spec: &str, process: &TitoProcess) -> Result<ControllerSet, HarnessError> {
    let gains = if let Some(algo) = spec.strip_prefix("ref:") {
        let algorithm = Algorithm::from_str(algo)?;
        harness::reference_gains(process.name(), algorithm).ok_or_else(|| {
            HarnessError::MissingReference {
                process: process.name().to_string(),
                algorithm,
            }
        })?
    } else if spec.contains(',') {
        let values: Result<Vec<f64>, _> = spec.split(',').map(|s| s.trim().parse()).collect();
        let values =
            values.map_err(|e| HarnessError::BadGains(format!("bad inline value: {e}")))?;
        if values.len() % 3 != 0 {
            return Err(HarnessError::BadGains(format!(
                "inline gains need 3 values per loop, got {}",
                values.len()
            )));
        }
        ControllerSet::from_flat(&values)
    } else {
        #[derive(serde::Deserialize)]
        struct GainsFile {
            loops: Vec<multiloop::pid::PidGains>,
        }
        let text = std::fs::read_to_string(spec)?;
        let file: GainsFile =
            toml::from_str(&text).map_err(|e| HarnessError::BadGains(e.to_string()))?;
        ControllerSet::new(file.loops)
    };
    if gains.len() != process.dim() {
        return Err(HarnessError::BadGains(format!(
            "{} loops of gains for a {}-loop plant",
            gains.len(),
            process.dim()
        )));
    }
    Ok(gains)
}

fn resolve_sim(
    process: &TitoProcess,
    dt: Option<f64>,
    horizon: Option<f64>,
) -> Result<SimConfig, HarnessError> {
    let defaults = SimConfig::default_for(process)?;
    Ok(SimConfig::for_process(
        process,
        dt.unwrap_or(defaults.dt),
        horizon.unwrap_or(defaults.horizon),
    )?)
}

fn algo_config(
    algorithm: Algorithm,
    config: &Option<PathBuf>,
) -> Result<AlgoConfig, HarnessError> {
    if let Some(path) = config {
        let file = TuningConfigFile::load(path)?;
        if let Some(section) = file.section(algorithm) {
            return Ok(section);
        }
    }
    Ok(AlgoConfig::equalized_default(algorithm, DEFAULT_EVAL_BUDGET))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Rga { process } => {
            let plant = load_process(&process)?;
            print!("{}", harness::report_rga(&plant)?);
        }
        Command::Simulate {
            process,
            gains,
            dt,
            horizon,
            out,
        } => {
            let plant = load_process(&process)?;
            let gains = parse_gains(&gains, &plant)?;
            let sim = resolve_sim(&plant, dt, horizon)?;
            let eval = harness::evaluate_gains(&plant, &gains, &sim, &CostWeights::default());
            let path =
                out.unwrap_or_else(|| PathBuf::from(format!("{}_trajectory.csv", plant.name())));
            eval.trajectory.write_csv(&path)?;
            print!("{eval}");
            println!("trajectory written to {}", path.display());
        }
        Command::Tune {
            process,
            algo,
            runs,
            seed,
            config,
            dt,
            horizon,
            out_dir,
        } => {
            let algorithm = Algorithm::from_str(&algo)?;
            let mut spec = ExperimentSpec::new(&process, algorithm)
                .with_runs(runs)
                .with_base_seed(seed)
                .with_algo(algo_config(algorithm, &config)?);
            spec.dt = dt;
            spec.horizon = horizon;
            let report = harness::run_experiment(&spec)?;
            print!("{report}");
            let dir = harness::persist_report(&report, &out_dir)?;
            println!("audit trail written to {}", dir.display());
        }
        Command::Calibrate {
            process,
            gains,
            target_j,
            range,
            dt,
        } => {
            let plant = load_process(&process)?;
            let gains = parse_gains(&gains, &plant)?;
            let (low, high) = parse_range(&range)?;
            let dt = dt.unwrap_or(SimConfig::default_for(&plant)?.dt);
            let outcome = harness::calibrate_horizon(
                &plant,
                &gains,
                target_j,
                (low, high),
                dt,
                &CostWeights::default(),
            )?;
            match outcome {
                CalibrationOutcome::Found { horizon, j } => {
                    println!("target J = {target_j} matched at horizon = {horizon:.4} (J = {j:.8})");
                }
                CalibrationOutcome::NoBracket { curve } => {
                    println!(
                        "target J = {target_j} is not reachable in [{low}, {high}]; J-vs-horizon curve:"
                    );
                    for (t, j) in curve {
                        println!("  horizon {t:>10.2} -> J = {j:.8}");
                    }
                }
            }
        }
        Command::BenchAll {
            runs,
            seed,
            config,
            out_dir,
            trend,
        } => {
            println!(
                "tuning {} benchmarks x {} algorithms, {} runs each (base seed {seed})\n",
                TitoProcess::benchmark_names().len(),
                Algorithm::all().len(),
                runs
            );
            for name in TitoProcess::benchmark_names() {
                for algorithm in Algorithm::all() {
                    let spec = ExperimentSpec::new(*name, algorithm)
                        .with_runs(runs)
                        .with_base_seed(seed)
                        .with_algo(algo_config(algorithm, &config)?);
                    let report = harness::run_experiment(&spec)?;
                    print!("{report}");
                    if *name == "ww" && algorithm == Algorithm::Ca {
                        println!(
                            "  note: no reference tuning exists for ww/ca; this result is reproduced from scratch"
                        );
                    }
                    harness::persist_report(&report, &out_dir)?;
                    println!();
                }
            }
            if trend > 0 {
                let report = harness::run_trend("wb", trend, runs, seed, DEFAULT_EVAL_BUDGET)?;
                print!("{report}");
            }
            println!("audit trails written to {}", out_dir.display());
        }
    }
    Ok(())
}

fn parse_range(range: &str) -> Result<(f64, f64), HarnessError> {
    let parts: Vec<&str> = range.split(':').collect();
    let bad = || HarnessError::BadGains(format!("range must be `low:high`, got `{range}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let low: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let high: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    Ok((low, high))
}
