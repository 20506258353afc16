use std::sync::Arc;

use rand::RngCore;

use super::{resolve_start, Feedback, FeedbackKind, FkmParams, LearnerStats, OnlineLearner};
use crate::estimator::{one_point_gradient, SmoothingParams};
use crate::geometry::sample_unit_sphere;
use crate::{ConstraintSet, ConvexBody, Error, Point, Result};

/// Projected online gradient descent on one-point estimates:
/// `x_{t+1} = Π_{(1−α)K}(x_t − η·g_t)`.
#[derive(Debug, Clone)]
pub struct Fkm {
    set: Arc<ConstraintSet>,
    params: FkmParams,
    x: Point,
    t: usize,
    pending: Option<Point>,
    last_estimate: Option<Point>,
    stats: LearnerStats,
}

impl Fkm {
    pub fn new(set: Arc<ConstraintSet>, params: FkmParams, x1: Option<Point>) -> Result<Self> {
        let x = resolve_start(&set, params.alpha, x1)?;
        Ok(Self {
            set,
            params,
            x,
            t: 1,
            pending: None,
            last_estimate: None,
            stats: LearnerStats::default(),
        })
    }

    pub fn params(&self) -> &FkmParams {
        &self.params
    }
}

impl OnlineLearner for Fkm {
    fn name(&self) -> &str {
        "fkm"
    }

    fn feedback_kind(&self) -> FeedbackKind {
        FeedbackKind::Bandit
    }

    fn query(&mut self, rng: &mut dyn RngCore) -> Result<Point> {
        if self.pending.is_some() {
            return Err(Error::Protocol("query called twice without update"));
        }
        let u = sample_unit_sphere(self.set.dim(), rng);
        let y = &self.x + &u * self.params.delta;
        self.pending = Some(u);
        Ok(y)
    }

    fn update(&mut self, feedback: Feedback, _rng: &mut dyn RngCore) -> Result<()> {
        let u = self
            .pending
            .take()
            .ok_or(Error::Protocol("update called without a pending query"))?;
        let Feedback::Value(value) = feedback else {
            return Err(Error::Protocol("feedback kind does not match the learner"));
        };
        let g = one_point_gradient(value, &u, SmoothingParams::new(self.params.delta, self.set.dim())?)?;
        let step = &self.x - &g * self.params.eta;
        self.x = self.set.shrink(self.params.alpha)?.project(&step)?;
        self.stats.projections += 1;
        self.last_estimate = Some(g);
        self.t += 1;
        self.stats.rounds += 1;
        Ok(())
    }

    fn iterate(&self) -> &Point {
        &self.x
    }

    fn shrink(&self) -> f64 {
        self.params.alpha
    }

    fn round(&self) -> usize {
        self.t
    }

    fn last_estimate(&self) -> Option<&Point> {
        self.last_estimate.as_ref()
    }

    fn stats(&self) -> LearnerStats {
        self.stats
    }
}
