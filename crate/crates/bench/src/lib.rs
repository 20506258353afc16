//! Fixtures shared by the benchmarks: one constraint set and a matching
//! loss sequence per experiment, generated from a fixed seed.

use bco_core::harness::{generate_problem, ExperimentConfig, ExperimentKind};
use bco_core::losses::Problem;
use bco_core::Point;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SEED: u64 = 2024;

/// Problem of the given experiment with a short horizon.
pub fn problem(experiment: ExperimentKind, n: usize, horizon: usize) -> Problem {
    let base = ExperimentConfig::new(experiment);
    let cfg = ExperimentConfig {
        n,
        k: base.k.min(n),
        t: horizon,
        bound_samples: 1000,
        ..base
    };
    generate_problem(&cfg, SEED).expect("valid fixture")
}

/// Gaussian directions for oracle benchmarks.
pub fn directions(dim: usize, count: usize) -> Vec<Point> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..count)
        .map(|_| Point::from_fn(dim, |_, _| rng.random::<f64>() * 2.0 - 1.0))
        .collect()
}

pub fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED)
}
