use multiloop::harness::{AlgoConfig, Algorithm, DEFAULT_EVAL_BUDGET};
use multiloop::objective::FitnessContext;
use multiloop::optim::Bounds;
use multiloop::process::TitoProcess;
use multiloop::sim::SimConfig;

fn main() {
    let plant = TitoProcess::benchmark("or").unwrap();
    let sim = SimConfig::default_for(&plant).unwrap();
    let ctx = FitnessContext::new(plant, sim);
    let fitness = ctx.evaluator();
    let bounds = Bounds::gain_box(2);

    for algo in Algorithm::all() {
        for seed in 1..=6 {
            let config = AlgoConfig::equalized_default(algo, DEFAULT_EVAL_BUDGET).with_seed(seed);
            let r = config.optimize(&fitness, &bounds);
            println!(
                "{algo} seed {seed}: J = {:.6e}  evals = {}  stable = {}",
                r.best_j,
                r.evaluations,
                r.best_j < 1e9
            );
        }
    }
}
