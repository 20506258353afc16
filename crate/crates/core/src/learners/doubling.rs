use rand::RngCore;

use super::{Feedback, FeedbackKind, LearnerStats, OnlineLearner};
use crate::{Error, Point, Result};

/// Builds a fresh learner tuned for the given horizon.
pub type LearnerFactory = Box<dyn Fn(usize) -> Result<Box<dyn OnlineLearner>> + Send + Sync>;

/// Epoch `m` of round `t ≥ 1`, i.e. `⌊log₂ t⌋`.
pub fn epoch_of(t: usize) -> usize {
    assert!(t >= 1, "rounds start at 1");
    t.ilog2() as usize
}

/// Anytime learner: epoch `m` serves rounds `2^m … 2^{m+1}−1` with a fresh
/// inner learner of horizon `2^m`.
pub struct DoublingWrapper {
    name: String,
    factory: LearnerFactory,
    inner: Box<dyn OnlineLearner>,
    t: usize,
    epoch: usize,
    finished: LearnerStats,
}

impl DoublingWrapper {
    pub fn new(name: &str, factory: LearnerFactory) -> Result<Self> {
        let inner = factory(1)?;
        Ok(Self {
            name: name.to_string(),
            factory,
            inner,
            t: 1,
            epoch: 0,
            finished: LearnerStats::default(),
        })
    }

    pub fn inner(&self) -> &dyn OnlineLearner {
        self.inner.as_ref()
    }

    /// Horizon of the current inner learner.
    pub fn inner_horizon(&self) -> usize {
        1 << self.epoch
    }

    /// Position of the next round inside the current epoch, starting at 1.
    pub fn inner_round(&self) -> usize {
        self.t - (1 << self.epoch) + 1
    }
}

impl OnlineLearner for DoublingWrapper {
    fn name(&self) -> &str {
        &self.name
    }

    fn feedback_kind(&self) -> FeedbackKind {
        self.inner.feedback_kind()
    }

    fn query(&mut self, rng: &mut dyn RngCore) -> Result<Point> {
        self.inner.query(rng)
    }

    fn update(&mut self, feedback: Feedback, rng: &mut dyn RngCore) -> Result<()> {
        self.inner.update(feedback, rng)?;
        self.t += 1;
        let epoch = epoch_of(self.t);
        if epoch != self.epoch {
            let fresh = (self.factory)(1 << epoch)?;
            if fresh.round() != 1 {
                return Err(Error::Protocol("factory returned a learner that already played"));
            }
            self.finished.absorb(&self.inner.stats());
            self.finished.restarts += 1;
            self.inner = fresh;
            self.epoch = epoch;
        }
        Ok(())
    }

    fn iterate(&self) -> &Point {
        self.inner.iterate()
    }

    fn shrink(&self) -> f64 {
        self.inner.shrink()
    }

    fn round(&self) -> usize {
        self.t
    }

    fn epoch(&self) -> usize {
        self.epoch
    }

    fn accumulated_gradient(&self) -> Option<&Point> {
        self.inner.accumulated_gradient()
    }

    fn last_estimate(&self) -> Option<&Point> {
        self.inner.last_estimate()
    }

    fn stats(&self) -> LearnerStats {
        let mut s = self.finished;
        s.absorb(&self.inner.stats());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{AlgorithmKind, Overrides};
    use crate::ConstraintSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::{Arc, Mutex};

    #[test]
    fn epoch_boundaries_are_inclusive() {
        let expected = [(1, 0), (2, 1), (3, 1), (4, 2), (7, 2), (8, 3), (15, 3), (16, 4)];
        for (t, m) in expected {
            assert_eq!(epoch_of(t), m, "round {t}");
        }
    }

    #[test]
    fn inner_learners_restart_at_powers_of_two() {
        let horizons = Arc::new(Mutex::new(Vec::new()));
        let seen = Arc::clone(&horizons);
        let set = Arc::new(ConstraintSet::ball(2, 1.0).unwrap());
        let factory: LearnerFactory = Box::new(move |h| {
            seen.lock().unwrap().push(h);
            AlgorithmKind::Pfbco.build(Arc::clone(&set), 1.0, h, &Overrides::default(), false)
        });
        let mut w = DoublingWrapper::new("pfbco", factory).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 1..=20usize {
            assert_eq!(w.round(), t);
            assert_eq!(w.epoch(), epoch_of(t));
            if t == 5 {
                assert_eq!((w.inner_horizon(), w.inner_round()), (4, 2));
            }
            let sum = w.accumulated_gradient().unwrap().norm();
            // a fresh inner learner has an empty gradient sum
            assert_eq!(sum == 0.0, t.is_power_of_two(), "round {t}");
            w.query(&mut rng).unwrap();
            w.update(Feedback::Value(0.5), &mut rng).unwrap();
        }
        assert_eq!(*horizons.lock().unwrap(), vec![1, 2, 4, 8, 16]);
        assert_eq!(w.stats().rounds, 20);
        assert_eq!(w.stats().restarts, 4);
    }
}
