use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Loss, LossFunction, LossSequence, Problem};
use crate::error::check_dim;
use crate::{ConstraintSet, Error, Point, Result};

/// `f(x) = ½ xᵀ GᵀG x + wᵀx`; the matrix is stored as the product `GᵀG`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLoss {
    a: DMatrix<f64>,
    w: Point,
}

impl QuadraticLoss {
    /// Builds the loss from the factor `G` (any row count, `n` columns).
    pub fn from_factor(g: &DMatrix<f64>, w: Point) -> Result<Self> {
        check_dim(g.ncols(), w.len())?;
        Ok(Self { a: g.tr_mul(g), w })
    }

    /// Builds the loss from an explicit symmetric PSD matrix.
    pub fn from_psd(a: DMatrix<f64>, w: Point) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidParameter("quadratic term must be square".into()));
        }
        check_dim(a.ncols(), w.len())?;
        if (&a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
            return Err(Error::InvalidParameter("quadratic term must be symmetric".into()));
        }
        Ok(Self { a, w })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear(&self) -> &Point {
        &self.w
    }
}

impl LossFunction for QuadraticLoss {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn eval(&self, x: &Point) -> Result<f64> {
        check_dim(self.w.len(), x.len())?;
        Ok(0.5 * x.dot(&(&self.a * x)) + self.w.dot(x))
    }

    fn grad(&self, x: &Point) -> Result<Point> {
        check_dim(self.w.len(), x.len())?;
        Ok(&self.a * x + &self.w)
    }
}

/// Quadratic experiment: `G_t`, `w_t` i.i.d. standard normal; constraint
/// `{0 ≤ x ≤ 1, Ax ≤ 1}` with `A ∈ R^{m×n}` i.i.d. uniform on `[0, 1]`.
pub fn gen_quadratic_sequence<R: Rng + ?Sized>(n: usize, m: usize, horizon: usize, rng: &mut R) -> Result<Problem> {
    if n == 0 || horizon == 0 {
        return Err(Error::InvalidParameter("quadratic experiment needs n, T ≥ 1".into()));
    }
    let a = DMatrix::from_fn(m, n, |_, _| rng.random::<f64>());
    let set = ConstraintSet::box_polytope(a)?;
    let losses = (0..horizon)
        .map(|_| {
            let g = DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal));
            let w = Point::from_fn(n, |_, _| rng.sample(StandardNormal));
            QuadraticLoss::from_factor(&g, w).map(Loss::Quadratic)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Problem {
        set,
        losses: LossSequence::new(losses),
    })
}
