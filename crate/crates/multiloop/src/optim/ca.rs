//! GA-based cultural algorithm: a genetic algorithm whose mutation is
//! steered by a belief space.
//!
//! Each generation the acceptance function draws the best quarter of the
//! population by rank-weighted stochastic universal sampling. The accepted
//! individuals update two knowledge components: normative (a per-dimension
//! interval enclosing them) and situational (the best individuals seen so
//! far). Mutation is directed toward the situational best with magnitude
//! scaled by the normative interval width, and offspring leaving the
//! normative interval are forced back into it.
//!
//! The normative interval is kept at least a fixed fraction of the full
//! search range wide. Without that floor the accepted envelope can collapse
//! onto the incumbent best in a few generations, which freezes the whole
//! population and stalls the search far from the optimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{blend_crossover, eval_batch, sort_population, tournament, Bounds, OptResult};

/// Per-gene mutation probability of the embedded GA.
const MUTATION_RATE: f64 = 0.1;
/// Tournament size of the embedded GA.
const TOURNAMENT_SIZE: usize = 3;
/// Minimum normative width as a fraction of the full search range.
const WIDTH_FLOOR_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Fraction of the population admitted to the belief space update.
    pub acceptance_fraction: f64,
    /// Elites carried over per generation; also the situational capacity.
    pub elite_count: usize,
    pub crossover_fraction: f64,
    pub rng_seed: u64,
}

impl Default for CaConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            generations: 150,
            acceptance_fraction: 0.25,
            elite_count: 2,
            crossover_fraction: 0.8,
            rng_seed: 0,
        }
    }
}

impl CaConfig {
    fn validate(&self) {
        assert!(self.population_size > 0);
        assert!((0.0..=1.0).contains(&self.acceptance_fraction));
        assert!(self.elite_count >= 1 && self.elite_count <= self.population_size);
        assert!((0.0..=1.0).contains(&self.crossover_fraction));
    }
}

/// Cultural knowledge store: normative per-dimension intervals and the
/// situational elite archive.
#[derive(Debug, Clone)]
pub struct BeliefSpace {
    normative_lo: Vec<f64>,
    normative_hi: Vec<f64>,
    /// Best-ever individuals, ascending by fitness.
    situational: Vec<(Vec<f64>, f64)>,
    capacity: usize,
}

impl BeliefSpace {
    pub fn new(bounds: &Bounds, capacity: usize) -> Self {
        Self {
            normative_lo: bounds.lower().to_vec(),
            normative_hi: bounds.upper().to_vec(),
            situational: Vec::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn normative(&self, d: usize) -> (f64, f64) {
        (self.normative_lo[d], self.normative_hi[d])
    }

    pub fn width(&self, d: usize) -> f64 {
        self.normative_hi[d] - self.normative_lo[d]
    }

    /// Best individual recorded so far.
    pub fn situational_best(&self) -> &(Vec<f64>, f64) {
        &self.situational[0]
    }

    pub fn situational(&self) -> &[(Vec<f64>, f64)] {
        &self.situational
    }

    /// Offer candidates to the situational archive; fitness of the best
    /// entry never worsens.
    pub fn update_situational<'a>(&mut self, candidates: impl Iterator<Item = (&'a [f64], f64)>) {
        for (x, j) in candidates {
            self.situational.push((x.to_vec(), j));
        }
        self.situational.sort_by(|a, b| a.1.total_cmp(&b.1));
        self.situational.truncate(self.capacity);
    }

    /// Rebuild the normative intervals from the accepted individuals: the
    /// envelope of accepted plus the situational best, padded per dimension
    /// to the floor width and intersected with the search bounds.
    pub fn update_normative(&mut self, accepted: &[&Vec<f64>], bounds: &Bounds) {
        debug_assert!(!accepted.is_empty());
        let best = self.situational_best().0.clone();
        for d in 0..bounds.dim() {
            let mut lo = best[d];
            let mut hi = best[d];
            for x in accepted {
                lo = lo.min(x[d]);
                hi = hi.max(x[d]);
            }
            let floor = WIDTH_FLOOR_FRACTION * bounds.width(d);
            let pad = ((floor - (hi - lo)) / 2.0).max(0.0);
            self.normative_lo[d] = (lo - pad).max(bounds.lower()[d]);
            self.normative_hi[d] = (hi + pad).min(bounds.upper()[d]);
        }
    }

    /// Force a vector back inside the normative intervals.
    pub fn repair(&self, x: &mut [f64]) {
        for (v, (&lo, &hi)) in x
            .iter_mut()
            .zip(self.normative_lo.iter().zip(&self.normative_hi))
        {
            *v = v.clamp(lo, hi);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.normative_lo.iter().zip(&self.normative_hi))
            .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }
}

/// Stochastic universal sampling over the first `candidates` ranks with
/// linear rank weights; returns deduplicated indices, best ranks first.
fn sus_ranks<R: Rng>(rng: &mut R, candidates: usize) -> Vec<usize> {
    let weights: Vec<f64> = (0..candidates).map(|i| (candidates - i) as f64).collect();
    let total: f64 = weights.iter().sum();
    let step = total / candidates as f64;
    let start = rng.gen_range(0.0..step);
    let mut picks = Vec::with_capacity(candidates);
    let mut cum = 0.0;
    let mut idx = 0;
    for k in 0..candidates {
        let pointer = start + step * k as f64;
        while cum + weights[idx] < pointer && idx + 1 < candidates {
            cum += weights[idx];
            idx += 1;
        }
        picks.push(idx);
    }
    picks.dedup();
    picks
}

/// Minimize `fitness` over `bounds` with the GA-based cultural algorithm.
pub fn ca_optimize<F>(fitness: &F, bounds: &Bounds, config: &CaConfig) -> OptResult
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

    let mut belief = BeliefSpace::new(bounds, config.elite_count);
    belief.update_situational(pop.iter().map(|x| x.as_slice()).zip(j.iter().copied()));

    let mut history = Vec::with_capacity(config.generations + 1);
    history.push(j[0]);

    let n_children = config.population_size - config.elite_count;
    for _ in 0..config.generations {
        // acceptance: rank-weighted SUS restricted to the top quartile
        let quartile = ((config.acceptance_fraction * config.population_size as f64).round()
            as usize)
            .max(1);
        let accepted_idx = sus_ranks(&mut rng, quartile.min(pop.len()));
        let accepted: Vec<&Vec<f64>> = accepted_idx.iter().map(|&i| &pop[i]).collect();
        belief.update_normative(&accepted, bounds);

        let mut children = Vec::with_capacity(n_children);
        for _ in 0..n_children {
            let mut child = if rng.gen::<f64>() < config.crossover_fraction {
                let p1 = tournament(&mut rng, &j, TOURNAMENT_SIZE);
                let p2 = tournament(&mut rng, &j, TOURNAMENT_SIZE);
                blend_crossover(&mut rng, &pop[p1], &pop[p2])
            } else {
                pop[tournament(&mut rng, &j, TOURNAMENT_SIZE)].clone()
            };
            for d in 0..dim {
                if rng.gen::<f64>() < MUTATION_RATE {
                    let z: f64 = rng.sample(StandardNormal);
                    let gap = belief.situational_best().0[d] - child[d];
                    if gap != 0.0 {
                        // directed toward the situational best
                        child[d] += z.abs() * belief.width(d) * gap.signum();
                    } else {
                        child[d] += z * belief.width(d);
                    }
                }
            }
            belief.repair(&mut child);
            children.push(child);
        }
        let child_j = eval_batch(fitness, &children);
        evaluations += children.len();

        pop.truncate(config.elite_count);
        j.truncate(config.elite_count);
        pop.extend(children);
        j.extend(child_j);
        sort_population(&mut pop, &mut j);

        belief.update_situational(pop.iter().map(|x| x.as_slice()).zip(j.iter().copied()));
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
