//! Loss families for the three experiments, their generators, and the
//! `‖f‖_∞ ≤ M`, `‖∇f‖ ≤ G` bound estimates the learners are tuned with.

mod matrix;
mod portfolio;
mod quadratic;

use rand::Rng;

pub use matrix::{gen_matrix_sequence, MatrixCompletionLoss};
pub use portfolio::{gen_price_ratios, ingest_price_csv, ratios_from_prices, PortfolioLoss};
pub use quadratic::{gen_quadratic_sequence, QuadraticLoss};

use crate::error::check_dim;
use crate::geometry::sample_unit_sphere;
use crate::{ConstraintSet, ConvexBody, Point, Result};

/// A differentiable convex loss on `R^n`.
pub trait LossFunction {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Point) -> Result<f64>;
    fn grad(&self, x: &Point) -> Result<Point>;
}

/// `f(x) = aᵀx + b`. Not an experiment family; used to probe estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLoss {
    pub a: Point,
    pub b: f64,
}

impl LinearLoss {
    pub fn new(a: Point, b: f64) -> Self {
        Self { a, b }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self::new(Point::zeros(dim), value)
    }
}

impl LossFunction for LinearLoss {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn eval(&self, x: &Point) -> Result<f64> {
        check_dim(self.a.len(), x.len())?;
        Ok(self.a.dot(x) + self.b)
    }

    fn grad(&self, x: &Point) -> Result<Point> {
        check_dim(self.a.len(), x.len())?;
        Ok(self.a.clone())
    }
}

#[derive(Debug, Clone)]
pub enum Loss {
    Quadratic(QuadraticLoss),
    Portfolio(PortfolioLoss),
    MatrixCompletion(MatrixCompletionLoss),
    Linear(LinearLoss),
}

impl Loss {
    fn as_dyn(&self) -> &dyn LossFunction {
        match self {
            Loss::Quadratic(l) => l,
            Loss::Portfolio(l) => l,
            Loss::MatrixCompletion(l) => l,
            Loss::Linear(l) => l,
        }
    }

    fn fingerprint(&self, hash: &mut Fnv) {
        match self {
            Loss::Quadratic(l) => {
                hash.write_f64s(l.matrix().as_slice());
                hash.write_f64s(l.linear().as_slice());
            }
            Loss::Portfolio(l) => hash.write_f64s(l.ratio().as_slice()),
            Loss::MatrixCompletion(l) => {
                hash.write_f64s(l.target().as_slice());
                for &idx in l.mask() {
                    hash.write(&idx.to_le_bytes());
                }
            }
            Loss::Linear(l) => {
                hash.write_f64s(l.a.as_slice());
                hash.write_f64s(&[l.b]);
            }
        }
    }
}

impl LossFunction for Loss {
    fn dim(&self) -> usize {
        self.as_dyn().dim()
    }

    fn eval(&self, x: &Point) -> Result<f64> {
        self.as_dyn().eval(x)
    }

    fn grad(&self, x: &Point) -> Result<Point> {
        self.as_dyn().grad(x)
    }
}

/// Sup-norm bound `M` on the losses and bound `G` on gradient norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub value: f64,
    pub gradient: f64,
}

/// Per-round losses `f_1 … f_T`.
#[derive(Debug, Clone)]
pub struct LossSequence {
    losses: Vec<Loss>,
    bounds: Option<Bounds>,
}

impl LossSequence {
    pub fn new(losses: Vec<Loss>) -> Self {
        Self { losses, bounds: None }
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn bounds(&self) -> Option<Bounds> {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    /// Loss of round `t`, 1-based.
    pub fn round(&self, t: usize) -> &Loss {
        &self.losses[t - 1]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Loss> {
        self.losses.iter()
    }

    pub fn as_slice(&self) -> &[Loss] {
        &self.losses
    }

    /// Prefix of the first `t` rounds.
    pub fn truncated(&self, t: usize) -> Self {
        Self {
            losses: self.losses[..t.min(self.losses.len())].to_vec(),
            bounds: self.bounds,
        }
    }

    /// FNV-1a digest of every loss parameter, used to confirm that all
    /// algorithms of a repetition faced the same adversary.
    pub fn checksum(&self) -> u64 {
        let mut hash = Fnv::new();
        for loss in &self.losses {
            loss.fingerprint(&mut hash);
        }
        hash.finish()
    }
}

/// A generated experiment instance.
#[derive(Debug, Clone)]
pub struct Problem {
    pub set: ConstraintSet,
    pub losses: LossSequence,
}

/// Safety factor applied to sampled maxima.
pub const BOUND_SAFETY: f64 = 1.5;

/// Estimates `M` and `G` from `samples` random (round, point) pairs.
///
/// Points are drawn where a learner shrinking by `alpha` can play: a random
/// feasible `p` is contracted into `(1−α)K` and pushed by `α·r` along a random
/// direction. With `alpha = 0` this samples `K` itself.
pub fn estimate_bounds<R: Rng + ?Sized>(
    losses: &LossSequence,
    set: &ConstraintSet,
    alpha: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Bounds> {
    let shrunk = set.shrink(alpha)?;
    let radius = alpha * set.inner_radius();
    let mut max_value = 0.0f64;
    let mut max_grad = 0.0f64;
    for _ in 0..samples {
        let t = rng.random_range(1..=losses.len());
        let p = set.random_point(rng)?;
        let q = shrunk.contract(&p) + sample_unit_sphere(set.dim(), rng) * radius;
        let loss = losses.round(t);
        max_value = max_value.max(loss.eval(&q)?.abs());
        max_grad = max_grad.max(loss.grad(&q)?.norm());
    }
    Ok(Bounds {
        value: BOUND_SAFETY * max_value,
        gradient: BOUND_SAFETY * max_grad,
    })
}

/// 64-bit FNV-1a.
#[derive(Debug, Clone)]
pub struct Fnv(u64);

impl Fnv {
    pub fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    pub fn write_f64s(&mut self, values: &[f64]) {
        for v in values {
            self.write(&v.to_bits().to_le_bytes());
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv {
    fn default() -> Self {
        Self::new()
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = Fnv::new();
    h.write(bytes);
    h.finish()
}
