use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fixed_point::{frank_wolfe, FixedPoint, SummedLoss};
use crate::geometry::CONTAINS_TOL;
use crate::learners::{ConditionalGradient, Feedback, OnlineLearner, Overrides, PfbcoParams};
use crate::losses::{estimate_bounds, gen_quadratic_sequence, LossFunction};
use crate::{ConvexBody, Point, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticConfig {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Blend-weight exponent `p` in `σ_t = t^{−p}`; the schedule default when absent.
    pub sigma_exponent: Option<f64>,
    pub aux_max_t: usize,
    pub epoch_sum_max_t: usize,
    pub fw_iterations: usize,
    pub bound_samples: usize,
}

impl Default for DiagnosticConfig {
    fn default() -> Self {
        Self {
            n: 5,
            m: 5,
            horizon: 200,
            seed: 7,
            sigma_exponent: None,
            aux_max_t: 1_000_000,
            epoch_sum_max_t: 100_000,
            fw_iterations: 200,
            bound_samples: 10_000,
        }
    }
}

/// A failed instance of `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub checked: usize,
    /// `min (rhs − lhs)` over all checked instances.
    pub min_margin: f64,
    /// First failing instance.
    pub violation: Option<Violation>,
}

impl CheckResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            min_margin: f64::INFINITY,
            violation: None,
        }
    }

    fn record(&mut self, t: usize, lhs: f64, rhs: f64) {
        self.checked += 1;
        let margin = rhs - lhs;
        self.min_margin = self
            .min_margin
            .min(if margin.is_nan() { f64::NEG_INFINITY } else { margin });
        let holds = matches!(lhs.partial_cmp(&rhs), Some(Ordering::Less | Ordering::Equal));
        if !holds && self.violation.is_none() {
            self.violation = Some(Violation { t, lhs, rhs });
        }
    }

    pub fn passed(&self) -> bool {
        self.violation.is_none() && self.checked > 0
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.violation {
            None if self.checked > 0 => write!(
                f,
                "PASS {:<22} {} instances, min margin {:.3e}",
                self.name, self.checked, self.min_margin
            ),
            None => write!(f, "FAIL {:<22} nothing was checked", self.name),
            Some(v) => write!(
                f,
                "FAIL {:<22} at t = {}: {:.6e} > {:.6e}",
                self.name, v.t, v.lhs, v.rhs
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticReport {
    pub checks: Vec<CheckResult>,
}

impl DiagnosticReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for DiagnosticReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// `−4t^{2/5}(t+1)^{2/5} + 4t^{4/5} − 2t^{1/5}(t+1)^{1/5} + 3(t+1)^{2/5} ≥ −10⁻⁹`.
pub fn auxiliary_inequality_scan(max_t: usize) -> CheckResult {
    let mut check = CheckResult::new("auxiliary-inequality");
    for t in 1..=max_t {
        let (a, b) = (t as f64, (t + 1) as f64);
        let value =
            -4.0 * a.powf(0.4) * b.powf(0.4) + 4.0 * a.powf(0.8) - 2.0 * a.powf(0.2) * b.powf(0.2) + 3.0 * b.powf(0.4);
        check.record(t, -value, 1e-9);
    }
    check
}

/// Epoch lengths `2^m` for `m < ⌈log₂(t+1)⌉` cover rounds `1..=t`, and
/// `Σ (2^m)^{4/5} ≤ (t+1)^{4/5}/(1 − 2^{−4/5})`.
pub fn epoch_sum_scan(max_t: usize) -> CheckResult {
    let mut check = CheckResult::new("epoch-sum");
    let factor = 1.0 / (1.0 - 2f64.powf(-0.8));
    let mut sum = 0.0;
    let mut epochs = 0u32;
    for t in 1..=max_t {
        let needed = usize::BITS - t.leading_zeros(); // ⌈log₂(t+1)⌉
        while epochs < needed {
            sum += 2f64.powi(epochs as i32).powf(0.8);
            epochs += 1;
        }
        check.record(t, sum, factor * ((t + 1) as f64).powf(0.8));
    }
    check
}

/// `F_t(x) = η·Sᵀx + ‖x − x₁‖²` as a quadratic sum.
fn leader_objective(eta: f64, grad_sum: &Point, x1: &Point) -> SummedLoss {
    let n = x1.len();
    SummedLoss::Quadratic {
        a: DMatrix::identity(n, n) * 2.0,
        w: grad_sum * eta - x1 * 2.0,
        b: x1.norm_squared(),
    }
}

struct RoundState {
    x: Point,
    grad_sum: Point,
    g: Point,
    sigma: f64,
}

/// Step-size, recursion, `h_t` and stability checks on a small quadratic run.
pub fn run_level_checks(cfg: &DiagnosticConfig) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let problem = gen_quadratic_sequence(cfg.n, cfg.m, cfg.horizon, &mut rng)?;
    let overrides = Overrides {
        sigma_exponent: cfg.sigma_exponent,
        ..Overrides::default()
    };
    let alpha = PfbcoParams::shrink_factor(&problem.set, cfg.horizon, &overrides)?;
    let bounds = estimate_bounds(&problem.losses, &problem.set, alpha, cfg.bound_samples, &mut rng)?;
    let params = PfbcoParams::tuned(&problem.set, bounds.value, cfg.horizon, &overrides)?;
    let set = Arc::new(problem.set.clone());
    let mut learner = ConditionalGradient::bandit(Arc::clone(&set), params, true, None)?;
    let shrunk = set.shrink(params.alpha)?;
    let d = set.diameter();
    let eta = params.eta;

    let mut feasibility = CheckResult::new("feasibility");
    let mut rounds = Vec::with_capacity(cfg.horizon);
    for t in 1..=cfg.horizon {
        let x = learner.iterate().clone();
        let grad_sum = learner.accumulated_gradient().expect("keeps a sum").clone();
        let y = learner.query(&mut rng)?;
        let inside = set.contains(&y, CONTAINS_TOL)? && shrunk.contains(&x, CONTAINS_TOL)?;
        feasibility.record(t, if inside { 0.0 } else { 1.0 }, 0.0);
        let value = problem.losses.round(t).eval(&y)?;
        learner.update(Feedback::Value(value), &mut rng)?;
        rounds.push(RoundState {
            x,
            grad_sum,
            g: learner.last_estimate().expect("just committed").clone(),
            sigma: params.sigma.at(t),
        });
    }

    let mut step = CheckResult::new("step-size");
    let mut recursion = CheckResult::new("step-size-recursion");
    for (i, r) in rounds.iter().enumerate() {
        let t = i + 1;
        let half_step = eta * r.g.norm() / 2.0;
        step.record(t, half_step, (2.0 * d * d * r.sigma).sqrt());
        if let Some(next) = rounds.get(i + 1) {
            let h = eta * next.g.norm() / 2.0;
            // descent term of the 2-smooth F_t is D²σ²
            let lhs = (2.0 * (1.0 - r.sigma) * d * d * r.sigma + d * d * r.sigma * r.sigma + h * h).sqrt() + h;
            recursion.record(t, lhs, (2.0 * d * d * next.sigma).sqrt());
        }
    }

    // x_t* for t = 1..=T+1; the last one uses the full sum
    let x1 = learner.start().clone();
    let mut leaders: Vec<FixedPoint> = Vec::with_capacity(rounds.len() + 1);
    for r in &rounds {
        let f = leader_objective(eta, &r.grad_sum, &x1);
        leaders.push(frank_wolfe(&f, &shrunk, &r.x, cfg.fw_iterations)?);
    }
    let total = learner.accumulated_gradient().expect("keeps a sum").clone();
    let f = leader_objective(eta, &total, &x1);
    leaders.push(frank_wolfe(&f, &shrunk, learner.iterate(), cfg.fw_iterations)?);

    let mut h_check = CheckResult::new("h-invariant");
    let mut stability = CheckResult::new("leader-stability");
    for (i, r) in rounds.iter().enumerate() {
        let t = i + 1;
        let f = leader_objective(eta, &r.grad_sum, &x1);
        let (now, next) = (&leaders[i], &leaders[i + 1]);
        h_check.record(t, f.eval(&r.x)? - now.value, 2.0 * d * d * r.sigma + now.gap);
        // F_t is 2-strongly convex: ‖x̂ − x*‖ ≤ √gap
        let slack = r.g.norm() * (now.gap.sqrt() + next.gap.sqrt());
        let lhs = r.g.dot(&(&now.point - &next.point));
        stability.record(t, lhs, 2.0 * eta * r.g.norm_squared() + slack);
    }
    Ok(vec![feasibility, step, recursion, h_check, stability])
}

pub fn diagnostic_suite(cfg: &DiagnosticConfig) -> Result<DiagnosticReport> {
    let mut checks = vec![
        auxiliary_inequality_scan(cfg.aux_max_t),
        epoch_sum_scan(cfg.epoch_sum_max_t),
    ];
    checks.extend(run_level_checks(cfg)?);
    Ok(DiagnosticReport { checks })
}
