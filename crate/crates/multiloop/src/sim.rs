//! Fixed-step closed-loop simulation of dead-time plants under
//! decentralized PID control.
//!
//! Each scalar channel is realized as an input-side delay line feeding one
//! or two zero-order-hold discretized first-order lags. The loop update is
//! synchronous: every step reads all plant outputs, forms all errors, runs
//! all controllers, then advances all channel states with the controller
//! outputs held over the step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pid::{ControllerSet, PidState};
use crate::process::{TitoProcess, TransferElement};

/// Any |y| or |u| beyond this flags the run as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

/// Errors from simulation configuration.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("horizon {horizon} too short: need at least 100 steps ({min})")]
    HorizonTooShort { horizon: f64, min: f64 },
    #[error("step {dt} too coarse for smallest time constant {tau}: need dt <= tau/10")]
    StepTooCoarseForLag { dt: f64, tau: f64 },
    #[error("step {dt} too coarse for smallest dead time {dead_time}: need dt <= L/5")]
    StepTooCoarseForDelay { dt: f64, dead_time: f64 },
    #[error("{got} references given for a {expected}-loop plant")]
    ReferenceCountMismatch { got: usize, expected: usize },
}

/// Simulation grid and reference program.
///
/// Construction is validated against the plant: `dt` must resolve the
/// fastest lag (`dt <= tau_min/10`) and the shortest nonzero delay
/// (`dt <= L_min/5`, so the delay ring buffer has at least 5 samples).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Per-loop set-point values, default 1.0 each.
    pub references: Vec<f64>,
    /// Time at which the reference steps are applied, default 0.
    pub reference_start: f64,
}

impl SimConfig {
    pub fn for_process(process: &TitoProcess, dt: f64, horizon: f64) -> Result<Self, SimError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SimError::NonPositiveStep(dt));
        }
        if horizon < 100.0 * dt {
            return Err(SimError::HorizonTooShort {
                horizon,
                min: 100.0 * dt,
            });
        }
        let tau = process.min_time_constant();
        if dt > tau / 10.0 {
            return Err(SimError::StepTooCoarseForLag { dt, tau });
        }
        if let Some(dead_time) = process.min_nonzero_dead_time() {
            if dt > dead_time / 5.0 {
                return Err(SimError::StepTooCoarseForDelay { dt, dead_time });
            }
        }
        Ok(Self {
            dt,
            horizon,
            references: vec![1.0; process.dim()],
            reference_start: 0.0,
        })
    }

    /// Default grid for a plant: the tabulated (dt, horizon) pair for the
    /// built-in benchmarks, or a derived pair for custom plants.
    pub fn default_for(process: &TitoProcess) -> Result<Self, SimError> {
        let (dt, horizon) = match process.name() {
            "wb" => (0.1, 200.0),
            "vl" => (0.05, 100.0),
            "ww" => (0.5, 2000.0),
            "or" => (0.01, 20.0),
            _ => {
                let tau = process.min_time_constant();
                let mut dt = tau / 10.0;
                if let Some(l) = process.min_nonzero_dead_time() {
                    dt = dt.min(l / 5.0);
                }
                let slowest = process
                    .elements()
                    .iter()
                    .flatten()
                    .map(|e| e.time_constants.iter().sum::<f64>() + e.dead_time)
                    .fold(0.0_f64, f64::max);
                (dt, (10.0 * slowest).max(100.0 * dt))
            }
        };
        Self::for_process(process, dt, horizon)
    }

    pub fn with_references(mut self, references: Vec<f64>) -> Result<Self, SimError> {
        let expected = self.references.len();
        if references.len() != expected {
            return Err(SimError::ReferenceCountMismatch {
                got: references.len(),
                expected,
            });
        }
        self.references = references;
        Ok(self)
    }

    pub fn with_reference_start(mut self, t: f64) -> Self {
        self.reference_start = t;
        self
    }

    /// Number of integration steps; the trajectory holds `n_steps() + 1`
    /// samples.
    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt + 1e-9).floor() as usize
    }
}

/// Input-side transport delay realized as a ring buffer of past inputs.
#[derive(Debug, Clone)]
struct DelayLine {
    buf: Vec<f64>,
    idx: usize,
}

impl DelayLine {
    fn new(len: usize) -> Self {
        Self {
            buf: vec![0.0; len],
            idx: 0,
        }
    }

    /// Store the newest input, return the one from `len` steps ago.
    fn push_pop(&mut self, input: f64) -> f64 {
        if self.buf.is_empty() {
            return input;
        }
        let out = self.buf[self.idx];
        self.buf[self.idx] = input;
        self.idx = (self.idx + 1) % self.buf.len();
        out
    }
}

/// Discrete realization of one plant channel at a fixed step.
///
/// A one-lag channel advances by the exact zero-order-hold map
/// `x⁺ = a·x + (1-a)·K·u_delayed` with `a = exp(-dt/τ)`; a two-lag channel
/// cascades two such stages with the gain applied once. The delay buffer
/// holds `round(L/dt)` samples and feeds the first lag.
#[derive(Debug, Clone)]
pub struct DiscreteElement {
    gain: f64,
    decay: [f64; 2],
    n_stages: usize,
    stages: [f64; 2],
    delay: DelayLine,
}

impl DiscreteElement {
    pub fn new(element: &TransferElement, dt: f64) -> Self {
        let n_stages = element.time_constants.len();
        let mut decay = [0.0; 2];
        for (i, &tau) in element.time_constants.iter().enumerate() {
            decay[i] = (-dt / tau).exp();
        }
        let delay_len = (element.dead_time / dt).round() as usize;
        Self {
            gain: element.gain,
            decay,
            n_stages,
            stages: [0.0; 2],
            delay: DelayLine::new(delay_len),
        }
    }

    /// Current channel output (the last lag state).
    pub fn output(&self) -> f64 {
        self.stages[self.n_stages - 1]
    }

    /// Advance one step with `input` held over the interval.
    pub fn advance(&mut self, input: f64) {
        let delayed = self.delay.push_pop(input);
        let first_prev = self.stages[0];
        self.stages[0] = self.decay[0] * first_prev + (1.0 - self.decay[0]) * self.gain * delayed;
        if self.n_stages == 2 {
            self.stages[1] = self.decay[1] * self.stages[1] + (1.0 - self.decay[1]) * first_prev;
        }
    }
}

/// Marker for a run that blew past [`DIVERGENCE_LIMIT`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub time: f64,
    pub step: usize,
}

/// Sampled series for one loop. All series share the trajectory length and
/// `error[k] == reference[k] - output[k]` holds exactly at every sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopSeries {
    pub reference: Vec<f64>,
    pub output: Vec<f64>,
    pub error: Vec<f64>,
    pub control: Vec<f64>,
}

/// Time-sampled closed-loop record; divergent runs are truncated at the
/// offending sample and flagged rather than reported as errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub time: Vec<f64>,
    pub loops: Vec<LoopSeries>,
    pub divergence: Option<Divergence>,
}

impl Trajectory {
    fn with_capacity(n_loops: usize, samples: usize) -> Self {
        let series = || LoopSeries {
            reference: Vec::with_capacity(samples),
            output: Vec::with_capacity(samples),
            error: Vec::with_capacity(samples),
            control: Vec::with_capacity(samples),
        };
        Self {
            time: Vec::with_capacity(samples),
            loops: (0..n_loops).map(|_| series()).collect(),
            divergence: None,
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn loop_count(&self) -> usize {
        self.loops.len()
    }

    /// Linear interpolation of a loop's output at time `t`.
    pub fn interpolate_output(&self, loop_idx: usize, t: f64) -> f64 {
        let series = &self.loops[loop_idx].output;
        let time = &self.time;
        if t <= time[0] {
            return series[0];
        }
        if t >= *time.last().unwrap() {
            return *series.last().unwrap();
        }
        let hi = time.partition_point(|&x| x < t);
        let (t0, t1) = (time[hi - 1], time[hi]);
        let w = (t - t0) / (t1 - t0);
        series[hi - 1] * (1.0 - w) + series[hi] * w
    }

    /// CSV with header `t,r1,y1,e1,u1,r2,y2,e2,u2,...`, one row per sample,
    /// full round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.loops.len() {
            out.push_str(&format!(",r{i},y{i},e{i},u{i}"));
        }
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&format!("{}", self.time[k]));
            for series in &self.loops {
                out.push_str(&format!(
                    ",{},{},{},{}",
                    series.reference[k], series.output[k], series.error[k], series.control[k]
                ));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

/// Run the closed loop: per step, read all outputs, form all errors, run
/// all controllers, then advance all channel states. Deterministic:
/// identical inputs give bit-identical trajectories.
///
/// # Panics
///
/// Panics if the controller count does not match the plant dimension.
pub fn simulate_closed_loop(
    process: &TitoProcess,
    controllers: &ControllerSet,
    config: &SimConfig,
) -> Trajectory {
    let n = process.dim();
    assert_eq!(
        controllers.len(),
        n,
        "controller count {} does not match plant dimension {n}",
        controllers.len()
    );
    assert_eq!(config.references.len(), n);

    let mut elements: Vec<Vec<DiscreteElement>> = process
        .elements()
        .iter()
        .map(|row| row.iter().map(|e| DiscreteElement::new(e, config.dt)).collect())
        .collect();
    let mut pid_states = vec![PidState::new(); n];

    let n_steps = config.n_steps();
    let mut traj = Trajectory::with_capacity(n, n_steps + 1);

    for k in 0..=n_steps {
        let t = k as f64 * config.dt;
        let mut diverged = false;
        for i in 0..n {
            let y: f64 = elements[i].iter().map(|e| e.output()).sum();
            let r = if t >= config.reference_start {
                config.references[i]
            } else {
                0.0
            };
            let e = r - y;
            let u = controllers.loops[i].step(&mut pid_states[i], e, config.dt);
            let series = &mut traj.loops[i];
            series.reference.push(r);
            series.output.push(y);
            series.error.push(e);
            series.control.push(u);
            if !y.is_finite() || y.abs() > DIVERGENCE_LIMIT || !u.is_finite() || u.abs() > DIVERGENCE_LIMIT
            {
                diverged = true;
            }
        }
        traj.time.push(t);
        if diverged {
            traj.divergence = Some(Divergence { time: t, step: k });
            break;
        }
        if k < n_steps {
            for j in 0..n {
                let u_j = traj.loops[j].control[k];
                for row in elements.iter_mut() {
                    row[j].advance(u_j);
                }
            }
        }
    }
    traj
}
