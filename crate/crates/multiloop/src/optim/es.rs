//! (μ/ρ + λ) evolution strategy with per-individual self-adaptive step
//! sizes driven by a windowed 1/5th success rule.
//!
//! Each generation builds λ offspring, each recombined from ρ randomly
//! chosen parents (intermediate recombination of both the vector and the
//! step size σ) and mutated by zero-mean Gaussian noise with that
//! offspring's σ. Survivor selection keeps the best μ of parents and
//! offspring together, so the best individual can only improve.
//!
//! Every mutation counts as a trial of each breeding parent's σ: a trial
//! succeeds when the offspring beats that parent. Once an individual has
//! logged `success_window` trials its σ is rescaled — success ratio above
//! 1/5 divides by the adaptation factor (larger steps), below 1/5
//! multiplies by it (smaller steps), exactly 1/5 leaves it unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{eval_batch, Bounds, OptResult};

/// Multiplicative step of the 1/5th success rule.
const SIGMA_ADAPT_FACTOR: f64 = 0.82;
/// Lower bound on σ so the search never fully stagnates.
const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EsConfig {
    /// Number of parents kept after selection.
    pub mu: usize,
    /// Number of offspring per generation.
    pub lambda: usize,
    /// Parents recombined per offspring.
    pub rho: usize,
    /// Initial step size of every individual.
    pub sigma_init: f64,
    /// Trials per individual between σ updates.
    pub success_window: u32,
    pub generations: usize,
    pub rng_seed: u64,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            mu: 30,
            lambda: 30,
            rho: 2,
            sigma_init: 0.5,
            success_window: 9,
            generations: 150,
            rng_seed: 0,
        }
    }
}

impl EsConfig {
    fn validate(&self) {
        assert!(self.mu > 0 && self.lambda > 0);
        assert!(self.rho >= 1 && self.rho <= self.mu, "need 1 <= rho <= mu");
        assert!(self.sigma_init > 0.0);
        assert!(self.success_window > 0);
    }
}

#[derive(Debug, Clone)]
struct Individual {
    x: Vec<f64>,
    sigma: f64,
    successes: u32,
    trials: u32,
}

/// Apply the windowed 1/5th rule to a step size.
fn one_fifth_update(sigma: f64, successes: u32, trials: u32) -> f64 {
    let ratio = f64::from(successes) / f64::from(trials);
    let updated = if ratio > 0.2 {
        sigma / SIGMA_ADAPT_FACTOR
    } else if ratio < 0.2 {
        sigma * SIGMA_ADAPT_FACTOR
    } else {
        sigma
    };
    updated.max(SIGMA_FLOOR)
}

/// Draw `count` distinct indices from `0..n`.
fn sample_distinct<R: Rng>(rng: &mut R, n: usize, count: usize) -> Vec<usize> {
    debug_assert!(count <= n);
    let mut picked = Vec::with_capacity(count);
    while picked.len() < count {
        let c = rng.gen_range(0..n);
        if !picked.contains(&c) {
            picked.push(c);
        }
    }
    picked
}

/// Minimize `fitness` over `bounds` with a (μ/ρ + λ) evolution strategy.
pub fn es_optimize<F>(fitness: &F, bounds: &Bounds, config: &EsConfig) -> OptResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let dim = bounds.dim();

    let mut parents: Vec<Individual> = (0..config.mu)
        .map(|_| Individual {
            x: bounds.sample(&mut rng),
            sigma: config.sigma_init,
            successes: 0,
            trials: 0,
        })
        .collect();
    let vectors: Vec<Vec<f64>> = parents.iter().map(|p| p.x.clone()).collect();
    let mut parent_j = eval_batch(fitness, &vectors);
    let mut evaluations = parents.len();

    let mut history = Vec::with_capacity(config.generations + 1);
    history.push(parent_j.iter().copied().fold(f64::INFINITY, f64::min));

    for _ in 0..config.generations {
        // sequential offspring generation owns the RNG stream
        let mut offspring: Vec<Individual> = Vec::with_capacity(config.lambda);
        let mut breeders: Vec<Vec<usize>> = Vec::with_capacity(config.lambda);
        for _ in 0..config.lambda {
            let chosen = sample_distinct(&mut rng, config.mu, config.rho);
            let mut x = vec![0.0; dim];
            let mut sigma = 0.0;
            for &p in &chosen {
                for (xi, pi) in x.iter_mut().zip(&parents[p].x) {
                    *xi += pi / config.rho as f64;
                }
                sigma += parents[p].sigma / config.rho as f64;
            }
            for xi in x.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *xi += z * sigma;
            }
            bounds.clamp_vec(&mut x);
            offspring.push(Individual {
                x,
                sigma,
                successes: 0,
                trials: 0,
            });
            breeders.push(chosen);
        }

        let vectors: Vec<Vec<f64>> = offspring.iter().map(|o| o.x.clone()).collect();
        let offspring_j = eval_batch(fitness, &vectors);
        evaluations += offspring.len();

        // log each mutation as a trial of the parents that bred it
        for (chosen, &j_off) in breeders.iter().zip(&offspring_j) {
            for &p in chosen {
                parents[p].trials += 1;
                if j_off < parent_j[p] {
                    parents[p].successes += 1;
                }
            }
        }
        for p in parents.iter_mut() {
            if p.trials >= config.success_window {
                p.sigma = one_fifth_update(p.sigma, p.successes, p.trials);
                p.successes = 0;
                p.trials = 0;
            }
        }

        // plus-selection: best mu of parents and offspring together
        let mut pool: Vec<(Individual, f64)> = parents
            .drain(..)
            .zip(parent_j.drain(..))
            .chain(offspring.into_iter().zip(offspring_j))
            .collect();
        pool.sort_by(|a, b| a.1.total_cmp(&b.1));
        pool.truncate(config.mu);
        for (ind, j) in pool {
            parents.push(ind);
            parent_j.push(j);
        }
        history.push(parent_j[0]);
    }

    OptResult {
        best_vector: parents[0].x.clone(),
        best_j: parent_j[0],
        history,
        evaluations,
        seed: config.rng_seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::test_functions::sphere;
    use std::sync::atomic::{AtomicBool, Ordering};

    #[test]
    fn success_rule_direction() {
        // above 1/5 grows sigma, below shrinks it, exactly 1/5 keeps it
        assert!(one_fifth_update(0.5, 3, 9) > 0.5);
        assert!(one_fifth_update(0.5, 1, 9) < 0.5);
        assert_eq!(one_fifth_update(0.5, 2, 10), 0.5);
        assert_eq!(one_fifth_update(0.5, 3, 10), 0.5 / 0.82);
        assert_eq!(one_fifth_update(0.5, 1, 10), 0.5 * 0.82);
    }

    #[test]
    fn sigma_never_drops_below_floor() {
        let mut sigma = 1e-6;
        for _ in 0..100 {
            sigma = one_fifth_update(sigma, 0, 9);
        }
        assert_eq!(sigma, SIGMA_FLOOR);
    }

    #[test]
    fn converges_on_sphere() {
        let bounds = Bounds::symmetric(6, 6.0);
        let config = EsConfig {
            generations: 200,
            rng_seed: 1,
            ..Default::default()
        };
        let result = es_optimize(&sphere, &bounds, &config);
        assert!(result.best_j < 1e-3, "best_j = {}", result.best_j);
    }

    #[test]
    fn history_is_non_increasing() {
        let bounds = Bounds::symmetric(6, 6.0);
        let config = EsConfig {
            generations: 80,
            rng_seed: 4,
            ..Default::default()
        };
        let result = es_optimize(&sphere, &bounds, &config);
        assert_eq!(result.history.len(), config.generations + 1);
        for w in result.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn never_evaluates_outside_bounds_even_with_huge_sigma() {
        let bounds = Bounds::new(vec![-0.5, -0.5], vec![0.5, 0.5]);
        let violated = AtomicBool::new(false);
        let probe = |x: &[f64]| {
            if !bounds.contains(x) {
                violated.store(true, Ordering::Relaxed);
            }
            sphere(x)
        };
        let config = EsConfig {
            sigma_init: 50.0,
            generations: 30,
            rng_seed: 6,
            ..Default::default()
        };
        es_optimize(&probe, &bounds, &config);
        assert!(!violated.load(Ordering::Relaxed));
    }

    #[test]
    fn same_seed_reproduces_bit_identical_results() {
        let bounds = Bounds::symmetric(4, 6.0);
        let config = EsConfig {
            generations: 25,
            rng_seed: 42,
            ..Default::default()
        };
        let a = es_optimize(&sphere, &bounds, &config);
        let b = es_optimize(&sphere, &bounds, &config);
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_parent_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let picked = sample_distinct(&mut rng, 5, 2);
            assert_eq!(picked.len(), 2);
            assert_ne!(picked[0], picked[1]);
            assert!(picked.iter().all(|&p| p < 5));
        }
    }
}
