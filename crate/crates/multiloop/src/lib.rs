//! Decentralized multiloop PID tuning for dead-time multivariable plants.
//!
//! The crate simulates n×n transfer-function plants (first- or second-order
//! lags plus transport delay per channel) under one parallel-form PID
//! controller per loop, scores closed-loop behaviour with a weighted
//! ITSE + ISCO cost, and tunes the controller gains with three evolutionary
//! optimizers: a real-coded genetic algorithm, a (μ/ρ + λ) self-adaptive
//! evolution strategy, and a GA-based cultural algorithm.
//!
//! Four classic 2×2 benchmark plants are built in (`wb`, `vl`, `ww`, `or`)
//! together with their relative gain arrays for pairing analysis.
//!
//! # Quick start
//!
//! ```
//! use multiloop::process::TitoProcess;
//! use multiloop::pid::ControllerSet;
//! use multiloop::sim::{simulate_closed_loop, SimConfig};
//! use multiloop::objective::{cost, CostWeights};
//!
//! let plant = TitoProcess::benchmark("wb").unwrap();
//! let gains = ControllerSet::from_flat(&[0.27, 0.0018, 0.25, -0.26, -0.012, -0.55]);
//! let config = SimConfig::for_process(&plant, 0.1, 200.0).unwrap();
//! let traj = simulate_closed_loop(&plant, &gains, &config);
//! assert!(traj.divergence.is_none());
//! let j = cost(&traj, &CostWeights::default());
//! assert!(j.is_finite() && j > 0.0);
//! ```
//!
//! See the `examples/` directory for one runnable example per capability,
//! and the `multiloop` binary for the command-line surface.

pub mod harness;
pub mod objective;
pub mod optim;
pub mod pid;
pub mod process;
pub mod sim;

pub use harness::{run_experiment, ExperimentReport, ExperimentSpec};
pub use objective::{cost, fitness, CostWeights, FitnessContext};
pub use optim::{ca_optimize, es_optimize, ga_optimize, Bounds, OptResult};
pub use pid::{ControllerSet, PidGains, PidState};
pub use process::{GainMatrix, TitoProcess, TransferElement};
pub use sim::{simulate_closed_loop, SimConfig, Trajectory};
