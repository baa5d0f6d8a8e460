//! Weighted ITSE + ISCO cost and the black-box fitness over gain vectors.
//!
//! The cost of a trajectory is
//! `J = Σ_loops ∫ [w1·t·e²(t) + w2·u²(t)] dt`,
//! integrated by the trapezoidal rule over the sample grid. Wrapping a
//! plant, a simulation grid and the weights gives a total fitness function
//! over flat gain vectors: divergent runs map to a large penalty that
//! grows the earlier the blow-up happens, so optimizers always receive a
//! finite, comparable score.

use serde::{Deserialize, Serialize};

use crate::pid::ControllerSet;
use crate::process::TitoProcess;
use crate::sim::{simulate_closed_loop, SimConfig, Trajectory};

/// Weights on the two cost terms; both default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    /// Weight on time-multiplied squared error.
    pub w1: f64,
    /// Weight on squared controller output.
    pub w2: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { w1: 1.0, w2: 1.0 }
    }
}

impl CostWeights {
    pub fn new(w1: f64, w2: f64) -> Self {
        assert!(w1 >= 0.0 && w2 >= 0.0 && w1 + w2 > 0.0);
        Self { w1, w2 }
    }
}

/// Unweighted integral terms for one loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopCost {
    pub itse: f64,
    pub isco: f64,
}

/// Per-loop cost terms; `total` recombines them with arbitrary weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub per_loop: Vec<LoopCost>,
}

impl CostBreakdown {
    pub fn total(&self, weights: &CostWeights) -> f64 {
        self.per_loop
            .iter()
            .map(|l| weights.w1 * l.itse + weights.w2 * l.isco)
            .sum()
    }
}

fn trapezoid(time: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for k in 1..time.len() {
        acc += (time[k] - time[k - 1]) * (f(k - 1) + f(k)) / 2.0;
    }
    acc
}

/// Per-loop ITSE and ISCO integrals of a trajectory.
pub fn cost_breakdown(traj: &Trajectory) -> CostBreakdown {
    let per_loop = traj
        .loops
        .iter()
        .map(|series| LoopCost {
            itse: trapezoid(&traj.time, |k| {
                traj.time[k] * series.error[k] * series.error[k]
            }),
            isco: trapezoid(&traj.time, |k| series.control[k] * series.control[k]),
        })
        .collect();
    CostBreakdown { per_loop }
}

/// Weighted ITSE + ISCO cost summed over all loops. Expects a
/// non-divergent trajectory; see [`fitness`] for the penalized total
/// function.
pub fn cost(traj: &Trajectory, weights: &CostWeights) -> f64 {
    cost_breakdown(traj).total(weights)
}

/// Everything needed to score a flat gain vector.
#[derive(Debug, Clone)]
pub struct FitnessContext {
    pub process: TitoProcess,
    pub sim: SimConfig,
    pub weights: CostWeights,
    /// Base score for divergent runs; must dominate any plausible finite J.
    pub divergence_penalty: f64,
}

impl FitnessContext {
    pub fn new(process: TitoProcess, sim: SimConfig) -> Self {
        Self {
            process,
            sim,
            weights: CostWeights::default(),
            divergence_penalty: 1e12,
        }
    }

    pub fn with_weights(mut self, weights: CostWeights) -> Self {
        self.weights = weights;
        self
    }

    /// Borrow the context as a plain fitness closure for the optimizers.
    pub fn evaluator(&self) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
        move |x| fitness(x, self)
    }
}

/// Simulate the closed loop for a flat gain vector and return its cost.
///
/// Divergent runs score `penalty * (1 + (horizon - t_div)/horizon)`, so an
/// earlier blow-up is strictly worse but every vector gets a finite value.
pub fn fitness(gain_vector: &[f64], ctx: &FitnessContext) -> f64 {
    assert_eq!(
        gain_vector.len(),
        3 * ctx.process.dim(),
        "gain vector length {} does not match 3 x {} loops",
        gain_vector.len(),
        ctx.process.dim()
    );
    let controllers = ControllerSet::from_flat(gain_vector);
    let traj = simulate_closed_loop(&ctx.process, &controllers, &ctx.sim);
    match traj.divergence {
        Some(div) => {
            let remaining = (ctx.sim.horizon - div.time).max(0.0) / ctx.sim.horizon;
            ctx.divergence_penalty * (1.0 + remaining)
        }
        None => cost(&traj, &ctx.weights),
    }
}
