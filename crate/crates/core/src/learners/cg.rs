use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{resolve_start, Feedback, FeedbackKind, LearnerStats, OnlineLearner, PfbcoParams};
use crate::estimator::{one_point_gradient, SmoothingParams};
use crate::geometry::sample_unit_sphere;
use crate::{ConstraintSet, ConvexBody, Error, LmoWorkspace, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Oracle {
    /// One-point estimate from `f_t(x_t + δu_t)`.
    Bandit,
    /// Exact gradient at `x_t` plus `N(0, std²)` noise per coordinate.
    NoisyGradient { std: f64 },
}

/// Follow-the-regularized-leader by one conditional-gradient step per round.
///
/// Round `t` minimizes the linearization of
/// `F_t(x) = η·Σ_{τ<t} g_τᵀx + ‖x − x₁‖²` at `x_t` over `(1−α)K`, then
/// moves to `(1−σ_t)x_t + σ_t v_t`. The direction is formed before `g_t` is
/// added to the sum.
#[derive(Debug, Clone)]
pub struct ConditionalGradient {
    name: &'static str,
    set: Arc<ConstraintSet>,
    params: PfbcoParams,
    regularized: bool,
    oracle: Oracle,
    x: Point,
    x1: Point,
    grad_sum: Point,
    t: usize,
    pending: Option<Point>,
    last_estimate: Option<Point>,
    ws: LmoWorkspace,
    stats: LearnerStats,
}

impl ConditionalGradient {
    /// The bandit learner; `regularized = false` drops the `‖x − x₁‖²` anchor.
    pub fn bandit(set: Arc<ConstraintSet>, params: PfbcoParams, regularized: bool, x1: Option<Point>) -> Result<Self> {
        let name = if regularized { "pfbco" } else { "unregularized" };
        Self::new(name, set, params, regularized, Oracle::Bandit, x1)
    }

    /// Online conditional gradient on noisy exact gradients; plays `y_t = x_t`.
    pub fn noisy_gradient(set: Arc<ConstraintSet>, params: PfbcoParams, std: f64, x1: Option<Point>) -> Result<Self> {
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise level {std} is invalid")));
        }
        Self::new("stochocg", set, params, true, Oracle::NoisyGradient { std }, x1)
    }

    fn new(
        name: &'static str,
        set: Arc<ConstraintSet>,
        params: PfbcoParams,
        regularized: bool,
        oracle: Oracle,
        x1: Option<Point>,
    ) -> Result<Self> {
        let x1 = resolve_start(&set, params.alpha, x1)?;
        Ok(Self {
            name,
            grad_sum: Point::zeros(set.dim()),
            set,
            params,
            regularized,
            oracle,
            x: x1.clone(),
            x1,
            t: 1,
            pending: None,
            last_estimate: None,
            ws: LmoWorkspace::default(),
            stats: LearnerStats::default(),
        })
    }

    pub fn params(&self) -> &PfbcoParams {
        &self.params
    }

    pub fn start(&self) -> &Point {
        &self.x1
    }

    pub fn set(&self) -> &ConstraintSet {
        &self.set
    }

    /// `∇F_t(x_t)` for the current round.
    pub fn direction(&self) -> Point {
        let mut d = &self.grad_sum * self.params.eta;
        if self.regularized {
            d += (&self.x - &self.x1) * 2.0;
        }
        d
    }

    fn estimate(&self, pending: &Point, feedback: Feedback, rng: &mut dyn RngCore) -> Result<Point> {
        match (self.oracle, feedback) {
            (Oracle::Bandit, Feedback::Value(value)) => {
                let smoothing = SmoothingParams::new(self.params.delta, self.set.dim())?;
                one_point_gradient(value, pending, smoothing)
            }
            (Oracle::NoisyGradient { std }, Feedback::Gradient(grad)) => {
                if grad.len() != self.set.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.set.dim(),
                        got: grad.len(),
                    });
                }
                Ok(grad.map(|g| g + std * Distribution::<f64>::sample(&StandardNormal, rng)))
            }
            _ => Err(Error::Protocol("feedback kind does not match the learner")),
        }
    }
}

impl OnlineLearner for ConditionalGradient {
    fn name(&self) -> &str {
        self.name
    }

    fn feedback_kind(&self) -> FeedbackKind {
        match self.oracle {
            Oracle::Bandit => FeedbackKind::Bandit,
            Oracle::NoisyGradient { .. } => FeedbackKind::FullInformation,
        }
    }

    fn query(&mut self, rng: &mut dyn RngCore) -> Result<Point> {
        if self.pending.is_some() {
            return Err(Error::Protocol("query called twice without update"));
        }
        let (y, pending) = match self.oracle {
            Oracle::Bandit => {
                let u = sample_unit_sphere(self.set.dim(), rng);
                (&self.x + &u * self.params.delta, u)
            }
            Oracle::NoisyGradient { .. } => (self.x.clone(), Point::zeros(0)),
        };
        self.pending = Some(pending);
        Ok(y)
    }

    fn update(&mut self, feedback: Feedback, rng: &mut dyn RngCore) -> Result<()> {
        let pending = self
            .pending
            .take()
            .ok_or(Error::Protocol("update called without a pending query"))?;
        let g = self.estimate(&pending, feedback, rng)?;

        let mut direction = self.direction();
        if direction.iter().all(|&d| d == 0.0) {
            direction.fill(1.0);
        }
        let shrunk = self.set.shrink(self.params.alpha)?;
        let before = (self.ws.calls, self.ws.power_iterations, self.ws.fallbacks);
        let v = shrunk.lmo_with(&direction, &mut self.ws)?;
        self.stats.lmo_calls += 1;
        self.stats.power_iterations += self.ws.power_iterations - before.1;
        self.stats.lmo_fallbacks += self.ws.fallbacks - before.2;

        let sigma = self.params.sigma.at(self.t);
        let d = self.set.diameter();
        if (2.0 * d * d * sigma).sqrt() < self.params.eta * g.norm() / 2.0 {
            self.stats.step_size_violations += 1;
        }
        self.grad_sum += &g;
        self.x = &self.x * (1.0 - sigma) + &v * sigma;
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

    fn accumulated_gradient(&self) -> Option<&Point> {
        Some(&self.grad_sum)
    }

    fn last_estimate(&self) -> Option<&Point> {
        self.last_estimate.as_ref()
    }

    fn stats(&self) -> LearnerStats {
        self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{Overrides, SigmaSchedule};
    use crate::losses::{gen_quadratic_sequence, LossFunction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(v: &[f64]) -> Point {
        Point::from_row_slice(v)
    }

    fn fixed_params(eta: f64, delta: f64, alpha: f64) -> PfbcoParams {
        PfbcoParams {
            horizon: 3,
            eta,
            delta,
            alpha,
            c: delta,
            sigma: SigmaSchedule::DEFAULT,
        }
    }

    /// Three rounds of the bandit learner on the unit disc, written out by hand:
    /// losses `‖y − a_t‖²`, δ = 0.1, η = 0.01, α = δ/r = 0.1.
    #[test]
    fn matches_hand_written_trace() {
        let targets = [[0.3, -0.2], [-0.5, 0.4], [0.1, 0.9]];
        let (eta, delta, alpha) = (0.01, 0.1, 0.1);

        // reference: plain arrays, closed-form disc LMO
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut x = [0.0f64, 0.0];
        let x1 = x;
        let mut sum = [0.0f64, 0.0];
        let mut reference = Vec::new();
        for (t, a) in targets.iter().enumerate() {
            let z: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let zn = (z[0] * z[0] + z[1] * z[1]).sqrt();
            let u = [z[0] / zn, z[1] / zn];
            let y = [x[0] + delta * u[0], x[1] + delta * u[1]];
            let f = (y[0] - a[0]).powi(2) + (y[1] - a[1]).powi(2);
            let g = [2.0 / delta * f * u[0], 2.0 / delta * f * u[1]];
            let mut d = [eta * sum[0] + 2.0 * (x[0] - x1[0]), eta * sum[1] + 2.0 * (x[1] - x1[1])];
            if d == [0.0, 0.0] {
                d = [1.0, 1.0];
            }
            let dn = (d[0] * d[0] + d[1] * d[1]).sqrt();
            let v = [-(1.0 - alpha) * d[0] / dn, -(1.0 - alpha) * d[1] / dn];
            sum = [sum[0] + g[0], sum[1] + g[1]];
            let s = ((t + 1) as f64).powf(-0.4);
            x = [(1.0 - s) * x[0] + s * v[0], (1.0 - s) * x[1] + s * v[1]];
            reference.push((y, x, sum));
        }

        let set = Arc::new(ConstraintSet::ball(2, 1.0).unwrap());
        let mut learner = ConditionalGradient::bandit(set, fixed_params(eta, delta, alpha), true, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for (a, (y_ref, x_ref, sum_ref)) in targets.iter().zip(&reference) {
            let y = learner.query(&mut rng).unwrap();
            let f = (&y - p(a)).norm_squared();
            learner.update(Feedback::Value(f), &mut rng).unwrap();
            assert!((y - p(y_ref)).norm() < 1e-14);
            assert!((learner.iterate() - p(x_ref)).norm() < 1e-14);
            assert!((learner.accumulated_gradient().unwrap() - p(sum_ref)).norm() < 1e-12);
        }
    }

    #[test]
    fn first_step_lands_on_the_tie_break_vertex() {
        let set = Arc::new(ConstraintSet::ball(2, 1.0).unwrap());
        let mut learner =
            ConditionalGradient::bandit(set.clone(), fixed_params(0.01, 0.1, 0.1), true, Some(p(&[0.3, 0.0]))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        learner.query(&mut rng).unwrap();
        learner.update(Feedback::Value(3.0), &mut rng).unwrap();
        // σ₁ = 1 and ∇F₁(x₁) = 0, so x₂ = lmo(1) on 0.9·B
        let expected = p(&[-0.9, -0.9]) / 2f64.sqrt();
        assert!((learner.iterate() - expected).norm() < 1e-15);
    }

    #[test]
    fn query_update_must_alternate() {
        let set = Arc::new(ConstraintSet::ball(2, 1.0).unwrap());
        let mut learner = ConditionalGradient::bandit(set, fixed_params(0.01, 0.1, 0.1), true, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            learner.update(Feedback::Value(1.0), &mut rng),
            Err(Error::Protocol(_))
        ));
        learner.query(&mut rng).unwrap();
        assert!(matches!(learner.query(&mut rng), Err(Error::Protocol(_))));
        assert!(matches!(
            learner.update(Feedback::Gradient(p(&[1.0, 0.0])), &mut rng),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn zero_radius_plays_the_iterate() {
        let set = Arc::new(ConstraintSet::ball(3, 1.0).unwrap());
        let mut learner = ConditionalGradient::bandit(set, fixed_params(0.01, 0.0, 0.0), true, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = learner.query(&mut rng).unwrap();
        assert_eq!(&y, learner.iterate());
    }

    #[test]
    fn played_points_stay_at_distance_delta() {
        let set = Arc::new(ConstraintSet::ball(4, 1.0).unwrap());
        let mut learner = ConditionalGradient::bandit(set, fixed_params(0.05, 0.2, 0.2), true, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = learner.iterate().clone();
            let y = learner.query(&mut rng).unwrap();
            assert!(((&y - &x).norm() - 0.2).abs() < 1e-12);
            let f = y.norm_squared() - y[0];
            learner.update(Feedback::Value(f), &mut rng).unwrap();
        }
    }

    #[test]
    fn unregularized_diverges_from_pfbco_after_round_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let problem = gen_quadratic_sequence(4, 2, 10, &mut rng).unwrap();
        let set = Arc::new(problem.set);
        let params = PfbcoParams::tuned(&set, 50.0, 10, &Overrides::default()).unwrap();
        let mut a = ConditionalGradient::bandit(set.clone(), params, true, None).unwrap();
        let mut b = ConditionalGradient::bandit(set.clone(), params, false, None).unwrap();
        let (mut ra, mut rb) = (ChaCha8Rng::seed_from_u64(9), ChaCha8Rng::seed_from_u64(9));
        let mut diverged_at = None;
        for t in 1..=10 {
            let loss = problem.losses.round(t);
            let ya = a.query(&mut ra).unwrap();
            let yb = b.query(&mut rb).unwrap();
            a.update(Feedback::Value(loss.eval(&ya).unwrap()), &mut ra).unwrap();
            b.update(Feedback::Value(loss.eval(&yb).unwrap()), &mut rb).unwrap();
            if diverged_at.is_none() && (a.iterate() - b.iterate()).norm() > 1e-12 {
                diverged_at = Some(t);
            }
        }
        // round 1 has a zero direction for both; from round 2 on the anchor term
        // 2(x_t − x₁) separates the directions
        assert!(matches!(diverged_at, Some(t) if t >= 2));
    }

    #[test]
    fn noise_free_stochocg_is_online_conditional_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let problem = gen_quadratic_sequence(3, 2, 20, &mut rng).unwrap();
        let set = Arc::new(problem.set);
        let params = PfbcoParams::tuned(&set, 10.0, 20, &Overrides::default()).unwrap();
        let mut learner = ConditionalGradient::noisy_gradient(set.clone(), params, 0.0, None).unwrap();
        let mut x = learner.start().clone();
        let x1 = x.clone();
        let mut sum = Point::zeros(3);
        let shrunk = set.shrink(params.alpha).unwrap();
        for t in 1..=20 {
            let loss = problem.losses.round(t);
            let y = learner.query(&mut rng).unwrap();
            assert_eq!(y, x);
            let g = loss.grad(&x).unwrap();
            learner.update(Feedback::Gradient(g.clone()), &mut rng).unwrap();
            let mut d = &sum * params.eta + (&x - &x1) * 2.0;
            if d.iter().all(|&v| v == 0.0) {
                d.fill(1.0);
            }
            let v = shrunk.lmo(&d).unwrap();
            sum += g;
            let s = (t as f64).powf(-0.4);
            x = &x * (1.0 - s) + v * s;
            assert!((learner.iterate() - &x).norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_noise_has_the_requested_spread() {
        let set = Arc::new(ConstraintSet::ball(2, 1.0).unwrap());
        let params = fixed_params(0.0, 0.1, 0.1);
        let mut learner = ConditionalGradient::noisy_gradient(set, params, 2.0, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let draws = 100_000;
        let (mut sum, mut sq) = (Point::zeros(2), Point::zeros(2));
        for _ in 0..draws {
            learner.query(&mut rng).unwrap();
            learner.update(Feedback::Gradient(p(&[1.0, -1.0])), &mut rng).unwrap();
            let g = learner.last_estimate().unwrap();
            sum += g;
            sq += g.component_mul(g);
        }
        let mean = &sum / draws as f64;
        // standard error of each coordinate mean is 2/√N
        let se = 2.0 / (draws as f64).sqrt();
        assert!((mean[0] - 1.0).abs() < 4.0 * se && (mean[1] + 1.0).abs() < 4.0 * se);
        let var = &sq / draws as f64 - mean.component_mul(&mean);
        assert!((var[0] - 4.0).abs() < 0.1 && (var[1] - 4.0).abs() < 0.1);
    }

    #[test]
    fn plays_stay_feasible_on_a_polytope() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let horizon = 100_000;
        let problem = gen_quadratic_sequence(5, 3, 1, &mut rng).unwrap();
        let set = Arc::new(problem.set);
        let params = PfbcoParams::tuned(&set, 20.0, horizon, &Overrides::default()).unwrap();
        let mut learner = ConditionalGradient::bandit(set.clone(), params, true, None).unwrap();
        let shrunk = set.shrink(params.alpha).unwrap();
        let loss = problem.losses.round(1);
        for _ in 0..horizon {
            let y = learner.query(&mut rng).unwrap();
            assert!(set.contains(&y, 1e-9).unwrap());
            assert!(shrunk.contains(learner.iterate(), 1e-9).unwrap());
            learner
                .update(Feedback::Value(loss.eval(&y).unwrap()), &mut rng)
                .unwrap();
        }
    }
}
