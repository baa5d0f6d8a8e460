//! Discrete parallel-form PID law, one instance per loop.

use serde::{Deserialize, Serialize};

/// Parallel PID gains `u = Kp·e + Ki·∫e + Kd·de/dt`. All gains may be
/// negative (plants with negative channel gains need them).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd }
    }

    /// Advance one controller step: rectangular integration of the error,
    /// backward-difference derivative on the error. The very first step
    /// treats the previous error as equal to the current one, so the
    /// derivative term is zero at start-up.
    pub fn step(&self, state: &mut PidState, error: f64, dt: f64) -> f64 {
        debug_assert!(dt > 0.0);
        state.integral += error * dt;
        let prev = state.prev_error.unwrap_or(error);
        state.prev_error = Some(error);
        self.kp * error + self.ki * state.integral + self.kd * (error - prev) / dt
    }
}

/// Controller memory: error integral and the last sampled error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: Option<f64>,
}

impl PidState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// One set of PID gains per loop; the flat form `[kp1, ki1, kd1, kp2, ...]`
/// is the decision vector the optimizers work on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSet {
    pub loops: Vec<PidGains>,
}

impl ControllerSet {
    pub fn new(loops: Vec<PidGains>) -> Self {
        Self { loops }
    }

    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    /// Unpack a flat gain vector, three entries per loop.
    pub fn from_flat(flat: &[f64]) -> Self {
        assert!(
            flat.len() % 3 == 0,
            "flat gain vector length must be a multiple of 3, got {}",
            flat.len()
        );
        Self {
            loops: flat
                .chunks_exact(3)
                .map(|c| PidGains::new(c[0], c[1], c[2]))
                .collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.loops
            .iter()
            .flat_map(|g| [g.kp, g.ki, g.kd])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pure_proportional() {
        let gains = PidGains::new(1.0, 0.0, 0.0);
        let mut state = PidState::new();
        assert_eq!(gains.step(&mut state, 0.5, 0.1), 0.5);
    }

    #[test]
    fn one_integration_step() {
        let gains = PidGains::new(0.0, 1.0, 0.0);
        let mut state = PidState::new();
        assert_abs_diff_eq!(gains.step(&mut state, 1.0, 0.1), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn backward_difference_derivative() {
        let gains = PidGains::new(0.0, 0.0, 1.0);
        let mut state = PidState {
            integral: 0.0,
            prev_error: Some(0.0),
        };
        assert_abs_diff_eq!(gains.step(&mut state, 0.2, 0.1), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn first_step_has_zero_derivative() {
        let gains = PidGains::new(0.0, 0.0, 5.0);
        let mut state = PidState::new();
        assert_eq!(gains.step(&mut state, 3.0, 0.01), 0.0);
        // second step sees the stored error
        assert_abs_diff_eq!(
            gains.step(&mut state, 3.5, 0.01),
            5.0 * 0.5 / 0.01,
            epsilon = 1e-9
        );
    }

    #[test]
    fn accumulator_is_exact_rectangular_sum() {
        let gains = PidGains::new(0.0, 1.0, 0.0);
        let mut state = PidState::new();
        let errors = [0.5, -0.25, 1.0, 0.125, -0.5];
        let dt = 0.25; // exactly representable
        let mut running = 0.0;
        for &e in &errors {
            gains.step(&mut state, e, dt);
            running += e * dt;
        }
        assert_eq!(state.integral, running);
    }

    #[test]
    fn control_is_linear_in_error_history() {
        let gains = PidGains::new(0.7, 0.3, 0.2);
        let errors = [0.1, 0.4, -0.2, 0.35, 0.0, -0.6];
        let dt = 0.1;
        let mut s1 = PidState::new();
        let mut s2 = PidState::new();
        for &e in &errors {
            let u1 = gains.step(&mut s1, e, dt);
            let u2 = gains.step(&mut s2, 2.0 * e, dt);
            assert_abs_diff_eq!(u2, 2.0 * u1, epsilon = 1e-12);
        }
    }

    #[test]
    fn proportional_only_tracks_error_forever() {
        let gains = PidGains::new(2.5, 0.0, 0.0);
        let mut state = PidState::new();
        for (k, &e) in [0.3, -0.7, 0.0, 1.2].iter().enumerate() {
            let u = gains.step(&mut state, e, 0.05);
            assert_eq!(u, 2.5 * e, "step {k}");
        }
    }

    #[test]
    fn flat_vector_round_trip() {
        let set = ControllerSet::from_flat(&[0.1, 0.2, 0.3, -0.4, -0.5, -0.6]);
        assert_eq!(set.len(), 2);
        assert_eq!(set.loops[1].ki, -0.5);
        assert_eq!(set.to_flat(), vec![0.1, 0.2, 0.3, -0.4, -0.5, -0.6]);
    }
}
