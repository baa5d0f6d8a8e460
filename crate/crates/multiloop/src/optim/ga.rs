//! Real-coded genetic algorithm with tournament selection, blend
//! crossover, per-gene Gaussian mutation and elitism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{blend_crossover, eval_batch, sort_population, tournament, Bounds, OptResult};

/// Mutation standard deviation as a fraction of each dimension's range.
const MUTATION_STD_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Fraction of children produced by crossover; the rest are copies of
    /// a tournament winner (both get mutated afterwards).
    pub crossover_fraction: f64,
    /// Per-gene probability of a Gaussian perturbation.
    pub mutation_rate: f64,
    pub elite_count: usize,
    pub tournament_size: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            generations: 150,
            crossover_fraction: 0.8,
            mutation_rate: 0.1,
            elite_count: 2,
            tournament_size: 3,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    fn validate(&self) {
        assert!(self.population_size > 0);
        assert!((0.0..=1.0).contains(&self.crossover_fraction));
        assert!((0.0..=1.0).contains(&self.mutation_rate));
        assert!(self.elite_count <= self.population_size);
        assert!(self.tournament_size > 0);
    }
}

/// Minimize `fitness` over `bounds` with a generational real-coded GA.
///
/// Every vector handed to `fitness` lies inside `bounds`, and the returned
/// history is non-increasing (elites survive unchanged).
pub fn ga_optimize<F>(fitness: &F, bounds: &Bounds, config: &GaConfig) -> OptResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let dim = bounds.dim();

    let mut pop: Vec<Vec<f64>> = (0..config.population_size)
        .map(|_| bounds.sample(&mut rng))
        .collect();
    let mut j = eval_batch(fitness, &pop);
    let mut evaluations = pop.len();
    sort_population(&mut pop, &mut j);

    let mut history = Vec::with_capacity(config.generations + 1);
    history.push(j[0]);

    let n_children = config.population_size - config.elite_count;
    for _ in 0..config.generations {
        let mut children = Vec::with_capacity(n_children);
        for _ in 0..n_children {
            let mut child = if rng.gen::<f64>() < config.crossover_fraction {
                let p1 = tournament(&mut rng, &j, config.tournament_size);
                let p2 = tournament(&mut rng, &j, config.tournament_size);
                blend_crossover(&mut rng, &pop[p1], &pop[p2])
            } else {
                pop[tournament(&mut rng, &j, config.tournament_size)].clone()
            };
            for d in 0..dim {
                if rng.gen::<f64>() < config.mutation_rate {
                    let z: f64 = rng.sample(StandardNormal);
                    child[d] += z * MUTATION_STD_FRACTION * bounds.width(d);
                }
            }
            bounds.clamp_vec(&mut child);
            children.push(child);
        }
        let child_j = eval_batch(fitness, &children);
        evaluations += children.len();

        pop.truncate(config.elite_count);
        j.truncate(config.elite_count);
        pop.extend(children);
        j.extend(child_j);
        sort_population(&mut pop, &mut j);
        history.push(j[0]);
    }

    OptResult {
        best_vector: pop[0].clone(),
        best_j: j[0],
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
    fn converges_on_sphere() {
        let bounds = Bounds::symmetric(6, 6.0);
        let config = GaConfig {
            generations: 200,
            rng_seed: 1,
            ..Default::default()
        };
        let result = ga_optimize(&sphere, &bounds, &config);
        assert!(result.best_j < 1e-3, "best_j = {}", result.best_j);
    }

    #[test]
    fn finds_shifted_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 2.0).powi(2) + (x[1] + 3.0).powi(2);
        let bounds = Bounds::symmetric(2, 6.0);
        let config = GaConfig {
            generations: 200,
            rng_seed: 5,
            ..Default::default()
        };
        let result = ga_optimize(&f, &bounds, &config);
        assert!((result.best_vector[0] - 2.0).abs() < 0.05);
        assert!((result.best_vector[1] + 3.0).abs() < 0.05);
    }

    #[test]
    fn single_individual_with_elitism_never_worsens() {
        let bounds = Bounds::symmetric(3, 6.0);
        let config = GaConfig {
            population_size: 1,
            elite_count: 1,
            generations: 50,
            rng_seed: 9,
            ..Default::default()
        };
        let result = ga_optimize(&sphere, &bounds, &config);
        for w in result.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(result.best_j, result.history[0]);
    }

    #[test]
    fn history_is_non_increasing() {
        let bounds = Bounds::symmetric(4, 6.0);
        let config = GaConfig {
            generations: 60,
            rng_seed: 11,
            ..Default::default()
        };
        let result = ga_optimize(&sphere, &bounds, &config);
        assert_eq!(result.history.len(), config.generations + 1);
        for w in result.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(*result.history.last().unwrap(), result.best_j);
    }

    #[test]
    fn never_evaluates_outside_bounds() {
        let bounds = Bounds::new(vec![-1.0, 0.5, -3.0], vec![1.0, 2.0, 0.0]);
        let violated = AtomicBool::new(false);
        let probe = |x: &[f64]| {
            if !bounds.contains(x) {
                violated.store(true, Ordering::Relaxed);
            }
            sphere(x)
        };
        let config = GaConfig {
            generations: 40,
            rng_seed: 2,
            ..Default::default()
        };
        ga_optimize(&probe, &bounds, &config);
        assert!(!violated.load(Ordering::Relaxed));
    }

    #[test]
    fn same_seed_reproduces_bit_identical_results() {
        let bounds = Bounds::symmetric(6, 6.0);
        let config = GaConfig {
            generations: 30,
            rng_seed: 77,
            ..Default::default()
        };
        let a = ga_optimize(&sphere, &bounds, &config);
        let b = ga_optimize(&sphere, &bounds, &config);
        assert_eq!(a, b);
    }
}
