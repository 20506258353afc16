//! Online learners behind one query/update interface.
//!
//! - [`ConditionalGradient`]: the projection-free bandit learner (with or
//!   without the `‖x − x₁‖²` anchor) and its noisy-gradient counterpart.
//! - [`Fkm`]: projected gradient descent with one-point estimates.
//! - [`DoublingWrapper`]: restarts any fixed-horizon learner on epochs
//!   `2^m … 2^{m+1}−1`.

mod cg;
mod doubling;
mod fkm;
mod params;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::RngCore;

pub use cg::ConditionalGradient;
pub use doubling::{epoch_of, DoublingWrapper, LearnerFactory};
pub use fkm::Fkm;
pub use params::{FkmParams, Overrides, PfbcoParams, SigmaSchedule};

use crate::geometry::CONTAINS_TOL;
use crate::{ConstraintSet, ConvexBody, Error, Point, Result};

/// What the environment reveals after a round.
#[derive(Debug, Clone, PartialEq)]
pub enum Feedback {
    /// `f_t(y_t)` only.
    Value(f64),
    /// `∇f_t(x_t)`.
    Gradient(Point),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackKind {
    Bandit,
    FullInformation,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LearnerStats {
    pub rounds: u64,
    pub lmo_calls: u64,
    pub power_iterations: u64,
    pub lmo_fallbacks: u64,
    pub projections: u64,
    /// Rounds where `√(2D²σ_t) < η‖g_t‖/2`.
    pub step_size_violations: u64,
    pub restarts: u64,
}

impl LearnerStats {
    pub(crate) fn absorb(&mut self, other: &LearnerStats) {
        self.rounds += other.rounds;
        self.lmo_calls += other.lmo_calls;
        self.power_iterations += other.power_iterations;
        self.lmo_fallbacks += other.lmo_fallbacks;
        self.projections += other.projections;
        self.step_size_violations += other.step_size_violations;
        self.restarts += other.restarts;
    }
}

/// Alternating `query` / `update` protocol.
pub trait OnlineLearner: Send {
    fn name(&self) -> &str;

    fn feedback_kind(&self) -> FeedbackKind;

    /// Point played this round. Must be followed by [`OnlineLearner::update`].
    fn query(&mut self, rng: &mut dyn RngCore) -> Result<Point>;

    fn update(&mut self, feedback: Feedback, rng: &mut dyn RngCore) -> Result<()>;

    /// Current iterate `x_t`.
    fn iterate(&self) -> &Point;

    /// Shrink factor `α` in force for the current round.
    fn shrink(&self) -> f64;

    /// Index `t` of the next round to be played, starting at 1.
    fn round(&self) -> usize;

    fn epoch(&self) -> usize {
        0
    }

    /// `Σ_{τ<t} g_τ` for learners that keep it.
    fn accumulated_gradient(&self) -> Option<&Point> {
        None
    }

    /// Most recently committed gradient estimate.
    fn last_estimate(&self) -> Option<&Point> {
        None
    }

    fn stats(&self) -> LearnerStats;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmKind {
    Pfbco,
    Fkm,
    Unregularized,
    StochOcg,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 4] = [
        AlgorithmKind::Pfbco,
        AlgorithmKind::Fkm,
        AlgorithmKind::Unregularized,
        AlgorithmKind::StochOcg,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmKind::Pfbco => "pfbco",
            AlgorithmKind::Fkm => "fkm",
            AlgorithmKind::Unregularized => "unregularized",
            AlgorithmKind::StochOcg => "stochocg",
        }
    }

    /// Smallest shrink factor this algorithm uses for horizons up to `horizon`.
    pub fn shrink_factor(&self, set: &ConstraintSet, horizon: usize, overrides: &Overrides) -> Result<f64> {
        match self {
            AlgorithmKind::Fkm => FkmParams::shrink_factor(set, horizon, overrides),
            _ => PfbcoParams::shrink_factor(set, horizon, overrides),
        }
    }

    fn build_fixed(
        self,
        set: Arc<ConstraintSet>,
        value_bound: f64,
        horizon: usize,
        overrides: &Overrides,
    ) -> Result<Box<dyn OnlineLearner>> {
        Ok(match self {
            AlgorithmKind::Fkm => {
                let params = FkmParams::classical(&set, value_bound, horizon, overrides)?;
                Box::new(Fkm::new(set, params, None)?)
            }
            AlgorithmKind::Pfbco | AlgorithmKind::Unregularized => {
                let params = PfbcoParams::tuned(&set, value_bound, horizon, overrides)?;
                Box::new(ConditionalGradient::bandit(
                    set,
                    params,
                    self == AlgorithmKind::Pfbco,
                    None,
                )?)
            }
            AlgorithmKind::StochOcg => {
                let params = PfbcoParams::tuned(&set, value_bound, horizon, overrides)?;
                let std = overrides.noise_std.unwrap_or(set.dim() as f64);
                Box::new(ConditionalGradient::noisy_gradient(set, params, std, None)?)
            }
        })
    }

    /// Builds a learner tuned for `horizon`, or its doubling-trick version.
    pub fn build(
        self,
        set: Arc<ConstraintSet>,
        value_bound: f64,
        horizon: usize,
        overrides: &Overrides,
        anytime: bool,
    ) -> Result<Box<dyn OnlineLearner>> {
        if !anytime {
            return self.build_fixed(set, value_bound, horizon, overrides);
        }
        let overrides = overrides.clone();
        let factory: LearnerFactory = Box::new(move |h| self.build_fixed(Arc::clone(&set), value_bound, h, &overrides));
        Ok(Box::new(DoublingWrapper::new(self.as_str(), factory)?))
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// The origin if it lies in `(1−α)K`, otherwise the center of `K`.
pub fn default_start(set: &ConstraintSet, alpha: f64) -> Result<Point> {
    let origin = Point::zeros(set.dim());
    if set.shrink(alpha)?.contains(&origin, CONTAINS_TOL)? {
        Ok(origin)
    } else {
        Ok(set.center().clone())
    }
}

pub(crate) fn resolve_start(set: &ConstraintSet, alpha: f64, x1: Option<Point>) -> Result<Point> {
    match x1 {
        None => default_start(set, alpha),
        Some(x) => {
            if x.len() != set.dim() {
                return Err(Error::DimensionMismatch {
                    expected: set.dim(),
                    got: x.len(),
                });
            }
            if set.shrink(alpha)?.contains(&x, CONTAINS_TOL)? {
                Ok(x)
            } else {
                Err(Error::Infeasible(format!(
                    "start point lies outside (1−α)K with α = {alpha}"
                )))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in AlgorithmKind::ALL {
            assert_eq!(k.as_str().parse::<AlgorithmKind>().unwrap(), k);
        }
        assert_eq!("StochOCG".parse::<AlgorithmKind>().unwrap(), AlgorithmKind::StochOcg);
        assert!("sgd".parse::<AlgorithmKind>().is_err());
    }

    #[test]
    fn default_start_points() {
        let ball = ConstraintSet::ball(3, 1.0).unwrap();
        assert_eq!(default_start(&ball, 0.1).unwrap(), Point::zeros(3));
        // the box polytope has the origin on its boundary
        let poly = ConstraintSet::box_polytope(nalgebra::DMatrix::from_row_slice(1, 2, &[1.0, 1.0])).unwrap();
        let x1 = default_start(&poly, 0.1).unwrap();
        assert_eq!(&x1, poly.center());
        assert!(poly.shrink(0.1).unwrap().contains(&x1, 0.0).unwrap());
    }

    #[test]
    fn explicit_start_must_be_feasible() {
        let ball = ConstraintSet::ball(2, 1.0).unwrap();
        let bad = Point::from_row_slice(&[2.0, 0.0]);
        assert!(matches!(
            resolve_start(&ball, 0.1, Some(bad)),
            Err(Error::Infeasible(_))
        ));
        let ok = Point::from_row_slice(&[0.5, 0.0]);
        assert_eq!(resolve_start(&ball, 0.1, Some(ok.clone())).unwrap(), ok);
    }
}
