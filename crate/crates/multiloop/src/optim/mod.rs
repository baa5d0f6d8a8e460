//! Derivative-free global optimizers over a bounded box.
//!
//! Three algorithms share the same black-box interface: a real-coded
//! genetic algorithm ([`ga_optimize`]), a (μ/ρ + λ) self-adaptive
//! evolution strategy ([`es_optimize`]) and a GA-based cultural algorithm
//! ([`ca_optimize`]). All consume a `Fn(&[f64]) -> f64` to minimize, never
//! evaluate outside the box, and are bit-reproducible for a fixed seed:
//! the RNG stream is consumed only in the sequential algorithm skeleton
//! while fitness evaluations of each generation run in parallel.

mod ca;
mod es;
mod ga;

pub use ca::{ca_optimize, BeliefSpace, CaConfig};
pub use es::{es_optimize, EsConfig};
pub use ga::{ga_optimize, GaConfig};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Per-dimension box constraints for the decision vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    /// # Panics
    ///
    /// Panics unless `lower[d] < upper[d]` for every dimension.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        assert!(!lower.is_empty());
        for (d, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            assert!(lo < hi, "bounds inverted in dimension {d}: [{lo}, {hi}]");
        }
        Self { lower, upper }
    }

    /// `[-half_width, half_width]` in every dimension.
    pub fn symmetric(dim: usize, half_width: f64) -> Self {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    /// The default `[-6, 6]` search box for every PID gain of an n-loop
    /// plant (3n dimensions).
    pub fn gain_box(n_loops: usize) -> Self {
        Self::symmetric(3 * n_loops, 6.0)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    pub fn clamp_vec(&self, x: &mut [f64]) {
        for (v, (&lo, &hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(lo, hi);
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| rng.gen_range(lo..=hi))
            .collect()
    }
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best_vector: Vec<f64>,
    pub best_j: f64,
    /// Best J after initialization and after each generation;
    /// non-increasing because all three algorithms retain their best.
    pub history: Vec<f64>,
    /// Total number of fitness evaluations.
    pub evaluations: usize,
    pub seed: u64,
}

/// Evaluate a batch of candidates in parallel, preserving order.
fn eval_batch<F>(fitness: &F, batch: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    batch.par_iter().map(|x| fitness(x)).collect()
}

/// Sort candidates ascending by fitness; stable, so ties keep insertion
/// order.
fn sort_population(pop: &mut Vec<Vec<f64>>, j: &mut Vec<f64>) {
    let mut paired: Vec<(Vec<f64>, f64)> = pop.drain(..).zip(j.drain(..)).collect();
    paired.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (x, v) in paired {
        pop.push(x);
        j.push(v);
    }
}

/// Index of the best of `size` uniformly drawn candidates.
fn tournament<R: Rng>(rng: &mut R, j: &[f64], size: usize) -> usize {
    let mut best = rng.gen_range(0..j.len());
    for _ in 1..size {
        let c = rng.gen_range(0..j.len());
        if j[c] < j[best] {
            best = c;
        }
    }
    best
}

/// Blend crossover: per-gene interpolation/extrapolation with mixing
/// coefficient uniform in [-0.25, 1.25].
fn blend_crossover<R: Rng>(rng: &mut R, p1: &[f64], p2: &[f64]) -> Vec<f64> {
    p1.iter()
        .zip(p2)
        .map(|(&a, &b)| {
            let alpha = rng.gen_range(-0.25..1.25);
            a + alpha * (b - a)
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod test_functions {
    /// Global minimum 0 at the origin.
    pub fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    /// Multimodal; global minimum 0 at the origin.
    pub fn rastrigin(x: &[f64]) -> f64 {
        10.0 * x.len() as f64
            + x.iter()
                .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gain_box_is_three_dims_per_loop() {
        let b = Bounds::gain_box(2);
        assert_eq!(b.dim(), 6);
        assert_eq!(b.lower(), &[-6.0; 6]);
        assert_eq!(b.upper(), &[6.0; 6]);
    }

    #[test]
    fn samples_stay_inside_and_clamp_works() {
        let b = Bounds::new(vec![-1.0, 0.0], vec![2.0, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = b.sample(&mut rng);
            assert!(b.contains(&x));
        }
        let mut v = vec![-5.0, 5.0];
        b.clamp_vec(&mut v);
        assert_eq!(v, vec![-1.0, 0.5]);
        assert!(b.contains(&v));
    }

    #[test]
    #[should_panic(expected = "bounds inverted")]
    fn inverted_bounds_panic() {
        Bounds::new(vec![1.0], vec![0.0]);
    }

    #[test]
    fn stable_sort_keeps_tie_order() {
        let mut pop = vec![vec![1.0], vec![2.0], vec![3.0]];
        let mut j = vec![5.0, 5.0, 1.0];
        sort_population(&mut pop, &mut j);
        assert_eq!(j, vec![1.0, 5.0, 5.0]);
        assert_eq!(pop, vec![vec![3.0], vec![1.0], vec![2.0]]);
    }
}
