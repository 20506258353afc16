use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Loss, LossFunction, LossSequence, Problem};
use crate::error::check_dim;
use crate::{ConstraintSet, Error, Point, Result};

/// `f(X) = ½ Σ_{(i,j)∈O} (X[i,j] − M[i,j])²` on row-major flattened `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCompletionLoss {
    target: DMatrix<f64>,
    /// Observed entries as sorted flat indices `i·cols + j`.
    mask: Vec<u32>,
}

impl MatrixCompletionLoss {
    pub fn new(target: DMatrix<f64>, mut mask: Vec<u32>) -> Result<Self> {
        let size = target.len();
        if mask.iter().any(|&i| i as usize >= size) {
            return Err(Error::InvalidParameter("mask index outside the matrix".into()));
        }
        mask.sort_unstable();
        mask.dedup();
        Ok(Self { target, mask })
    }

    pub fn target(&self) -> &DMatrix<f64> {
        &self.target
    }

    pub fn mask(&self) -> &[u32] {
        &self.mask
    }

    fn entry(&self, flat: u32) -> f64 {
        let cols = self.target.ncols();
        let flat = flat as usize;
        self.target[(flat / cols, flat % cols)]
    }
}

impl LossFunction for MatrixCompletionLoss {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn eval(&self, x: &Point) -> Result<f64> {
        check_dim(self.target.len(), x.len())?;
        let sum: f64 = self
            .mask
            .iter()
            .map(|&idx| (x[idx as usize] - self.entry(idx)).powi(2))
            .sum();
        Ok(0.5 * sum)
    }

    fn grad(&self, x: &Point) -> Result<Point> {
        check_dim(self.target.len(), x.len())?;
        let mut g = Point::zeros(x.len());
        for &idx in &self.mask {
            g[idx as usize] = x[idx as usize] - self.entry(idx);
        }
        Ok(g)
    }
}

/// Matrix-completion experiment: `M_t = N_tᵀN_t` with `N_t ∈ R^{k×n}` standard
/// normal, a fresh uniform mask of `⌈n²/2⌉` entries each round, and the
/// nuclear-norm ball of radius `k` as constraint.
pub fn gen_matrix_sequence<R: Rng + ?Sized>(n: usize, k: usize, horizon: usize, rng: &mut R) -> Result<Problem> {
    if n == 0 || k == 0 || k > n || horizon == 0 {
        return Err(Error::InvalidParameter(format!(
            "matrix completion needs 1 ≤ k ≤ n and T ≥ 1 (n={n}, k={k}, T={horizon})"
        )));
    }
    let observed = (n * n).div_ceil(2);
    let losses = (0..horizon)
        .map(|_| {
            let factor = DMatrix::<f64>::from_fn(k, n, |_, _| rng.sample(StandardNormal));
            let target = factor.tr_mul(&factor);
            let mask = index::sample(rng, n * n, observed)
                .into_iter()
                .map(|i| i as u32)
                .collect();
            MatrixCompletionLoss::new(target, mask).map(Loss::MatrixCompletion)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Problem {
        set: ConstraintSet::nuclear_norm_ball(k as f64, n, n)?,
        losses: LossSequence::new(losses),
    })
}
