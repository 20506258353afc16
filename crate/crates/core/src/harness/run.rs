use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use crate::geometry::CONTAINS_TOL;
use crate::learners::{Feedback, FeedbackKind, LearnerStats, OnlineLearner};
use crate::losses::{
    estimate_bounds, fnv1a, gen_matrix_sequence, gen_price_ratios, gen_quadratic_sequence, ingest_price_csv, Bounds,
    LossFunction, Problem,
};
use crate::{ConvexBody, Error, Result};

/// Environment variable capping the worker threads; 0 or unset means automatic.
pub const THREADS_ENV: &str = "BCO_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub epoch: usize,
    pub loss_y: f64,
    pub loss_x: f64,
    pub cum_loss_y: f64,
    pub cum_loss_x: f64,
    pub round_ns: u64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub algorithm: String,
    pub seed: u64,
    pub rounds: Vec<RoundRecord>,
    pub total_ns: u64,
    /// Digest of the loss sequence the run faced.
    pub loss_checksum: u64,
    /// `M`, `G` the learner was tuned with.
    pub bounds: Bounds,
    /// Largest `|f_t|` and `‖∇f_t‖` seen at played points and iterates.
    pub observed: Bounds,
    pub infeasible_plays: u64,
    pub infeasible_iterates: u64,
    pub stats: LearnerStats,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn cumulative_loss_y(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_loss_y)
    }

    pub fn cumulative_loss_x(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_loss_x)
    }
}

/// One repetition: its shared adversary and every algorithm's trace.
#[derive(Debug)]
pub struct Repetition {
    pub index: usize,
    pub seed: u64,
    pub problem: Problem,
    pub traces: Vec<RunTrace>,
}

/// Generator stream of a repetition seed, split by a name.
pub fn named_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name.as_bytes()));
    rng
}

/// Builds the loss sequence for a repetition seed and attaches `M`, `G`
/// estimates that cover every shrink factor the configured algorithms use.
pub fn generate_problem(cfg: &ExperimentConfig, seed: u64) -> Result<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut problem = match cfg.experiment {
        ExperimentKind::Quadratic => gen_quadratic_sequence(cfg.n, cfg.m, cfg.t, &mut rng)?,
        ExperimentKind::Portfolio => match &cfg.prices {
            None => gen_price_ratios(cfg.n, cfg.t, &mut rng)?,
            Some(path) => {
                let problem = ingest_price_csv(path)?;
                if problem.losses.len() < cfg.t {
                    return Err(Error::Config(format!(
                        "price file has {} ratios but t = {}",
                        problem.losses.len(),
                        cfg.t
                    )));
                }
                Problem {
                    losses: problem.losses.truncated(cfg.t),
                    set: problem.set,
                }
            }
        },
        ExperimentKind::MatrixCompletion => gen_matrix_sequence(cfg.n, cfg.k, cfg.t, &mut rng)?,
    };
    let alpha = cfg
        .algorithms
        .iter()
        .map(|a| a.shrink_factor(&problem.set, cfg.t, &cfg.overrides))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let mut bounds_rng = named_rng(seed, "bounds");
    let bounds = estimate_bounds(&problem.losses, &problem.set, alpha, cfg.bound_samples, &mut bounds_rng)?;
    problem.losses = problem.losses.with_bounds(bounds);
    Ok(problem)
}

/// Plays `learner` against the problem's losses for all rounds.
pub fn run_learner(
    learner: &mut dyn OnlineLearner,
    problem: &Problem,
    seed: u64,
    check_feasibility: bool,
    rng: &mut ChaCha8Rng,
) -> Result<RunTrace> {
    let losses = &problem.losses;
    let set = &problem.set;
    let mut rounds = Vec::with_capacity(losses.len());
    let (mut cum_y, mut cum_x) = (0.0, 0.0);
    let mut observed = Bounds {
        value: 0.0,
        gradient: 0.0,
    };
    let (mut bad_y, mut bad_x) = (0, 0);
    let mut total_ns = 0u64;
    for t in 1..=losses.len() {
        let loss = losses.round(t);
        let epoch = learner.epoch();

        let start = Instant::now();
        let y = learner.query(rng)?;
        let query_ns = start.elapsed().as_nanos() as u64;

        let x = learner.iterate().clone();
        if check_feasibility {
            if !set.contains(&y, CONTAINS_TOL)? {
                bad_y += 1;
            }
            if !set.shrink(learner.shrink())?.contains(&x, CONTAINS_TOL)? {
                bad_x += 1;
            }
        }
        let loss_y = loss.eval(&y)?;
        let loss_x = loss.eval(&x)?;
        let feedback = match learner.feedback_kind() {
            FeedbackKind::Bandit => Feedback::Value(loss_y),
            FeedbackKind::FullInformation => Feedback::Gradient(loss.grad(&x)?),
        };
        observed.value = observed.value.max(loss_y.abs()).max(loss_x.abs());
        observed.gradient = observed.gradient.max(loss.grad(&y)?.norm()).max(loss.grad(&x)?.norm());

        let start = Instant::now();
        learner.update(feedback, rng)?;
        let round_ns = query_ns + start.elapsed().as_nanos() as u64;

        total_ns += round_ns;
        cum_y += loss_y;
        cum_x += loss_x;
        rounds.push(RoundRecord {
            t,
            epoch,
            loss_y,
            loss_x,
            cum_loss_y: cum_y,
            cum_loss_x: cum_x,
            round_ns,
        });
    }
    Ok(RunTrace {
        algorithm: learner.name().to_string(),
        seed,
        rounds,
        total_ns,
        loss_checksum: losses.checksum(),
        bounds: losses.bounds().unwrap_or(Bounds {
            value: f64::NAN,
            gradient: f64::NAN,
        }),
        observed,
        infeasible_plays: bad_y,
        infeasible_iterates: bad_x,
        stats: learner.stats(),
    })
}

/// Generates repetition `index` and runs every configured algorithm on it.
pub fn run_repetition(cfg: &ExperimentConfig, index: usize) -> Result<Repetition> {
    let seed = cfg.base_seed.wrapping_add(index as u64);
    let problem = generate_problem(cfg, seed)?;
    let bounds = problem.losses.bounds().expect("bounds attached by generate_problem");
    let set = Arc::new(problem.set.clone());
    let traces = cfg
        .algorithms
        .iter()
        .map(|&kind| {
            let mut learner = kind.build(Arc::clone(&set), bounds.value, cfg.t, &cfg.overrides, cfg.anytime)?;
            let mut rng = named_rng(seed, kind.as_str());
            run_learner(learner.as_mut(), &problem, seed, cfg.check_feasibility, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Repetition {
        index,
        seed,
        problem,
        traces,
    })
}

/// Worker pool sized by [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}")))?,
        _ => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))
}

/// Runs all repetitions in parallel and reduces each with `reduce` before the
/// next is scheduled, so only a few loss sequences are alive at once. Results
/// are in repetition order.
pub fn run_experiment_with<T, F>(cfg: &ExperimentConfig, reduce: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Repetition) -> Result<T> + Sync,
{
    cfg.validate()?;
    thread_pool()?.install(|| {
        (0..cfg.repetitions)
            .into_par_iter()
            .map(|i| run_repetition(cfg, i).and_then(&reduce))
            .collect()
    })
}

/// All traces, ordered by repetition and then by the configured algorithm order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunTrace>> {
    Ok(run_experiment_with(cfg, |rep| Ok(rep.traces))?
        .into_iter()
        .flatten()
        .collect())
}
