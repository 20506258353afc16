//! Power iteration for the leading singular pair, plus nuclear-norm helpers.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::projections::project_capped_simplex;
use crate::{Error, Result};

const START_SEED: u64 = 0x5eed_0fc0_ffee;

#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub max_iters: usize,
    /// Stop once the Rayleigh quotient changes by less than this (relative).
    pub tol: f64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SingularTriplet {
    pub sigma: f64,
    pub left: DVector<f64>,
    pub right: DVector<f64>,
    pub iterations: usize,
}

/// Deterministic seeded start vector of length `n`.
pub fn seeded_start(n: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng))
}

impl PowerIteration {
    /// Leading singular triplet of `d` via power iteration on `dᵀd`.
    ///
    /// `start` seeds the right singular vector; it falls back to the
    /// deterministic seeded start if missing, mis-sized or degenerate.
    pub fn top_singular(&self, d: &DMatrix<f64>, start: Option<&DVector<f64>>) -> Result<SingularTriplet> {
        let (rows, cols) = d.shape();
        let mut v = match start {
            Some(s) if s.len() == cols && s.norm() > 1e-12 => s.normalize(),
            _ => seeded_start(cols).normalize(),
        };
        let data = d.as_slice();
        if data.iter().all(|&x| x == 0.0) {
            return Ok(SingularTriplet {
                sigma: 0.0,
                left: DVector::zeros(rows),
                right: v,
                iterations: 0,
            });
        }
        let gram = gram(data, rows, cols);
        let mut z = DVector::zeros(cols);
        let mut lambda_prev = f64::NAN;
        let mut change = f64::INFINITY;

        for iter in 1..=self.max_iters {
            // z = dᵀd·v and λ = vᵀz = ‖d·v‖²
            mul_tr(&gram, cols, v.as_slice(), z.as_mut_slice());
            let lambda = v.dot(&z);
            if lambda <= 0.0 {
                // v lies in the kernel: an unlucky start
                v = seeded_start(cols).normalize();
                continue;
            }
            if lambda_prev.is_finite() {
                change = (lambda - lambda_prev).abs() / lambda;
                if change < self.tol {
                    let z_norm = z.norm();
                    v.copy_from(&z);
                    v.unscale_mut(z_norm);
                    let mut w = DVector::zeros(rows);
                    mul(data, rows, v.as_slice(), w.as_mut_slice());
                    let sigma = w.norm();
                    w.unscale_mut(sigma);
                    return Ok(SingularTriplet {
                        sigma,
                        left: w,
                        right: v,
                        iterations: iter,
                    });
                }
            }
            let z_norm = z.norm();
            v.copy_from(&z);
            v.unscale_mut(z_norm);
            lambda_prev = lambda;
        }
        Err(Error::PowerIterationNotConverged {
            iterations: self.max_iters,
            change,
        })
    }
}

/// Column-major `dᵀd` of a column-major `rows × cols` matrix.
fn gram(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let columns: Vec<&[f64]> = data.chunks_exact(rows).collect();
    let mut out = vec![0.0; cols * cols];
    for j in 0..cols {
        for k in 0..=j {
            let dot: f64 = columns[j].iter().zip(columns[k]).map(|(a, b)| a * b).sum();
            out[j * cols + k] = dot;
            out[k * cols + j] = dot;
        }
    }
    out
}

/// `out = D·v` for column-major `data` with `rows` rows.
fn mul(data: &[f64], rows: usize, v: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for (col, &vj) in data.chunks_exact(rows).zip(v) {
        for (o, &a) in out.iter_mut().zip(col) {
            *o += a * vj;
        }
    }
}

/// `out = Dᵀ·w` for column-major `data` with `rows` rows.
fn mul_tr(data: &[f64], rows: usize, w: &[f64], out: &mut [f64]) {
    for (o, col) in out.iter_mut().zip(data.chunks_exact(rows)) {
        *o = col.iter().zip(w).map(|(a, b)| a * b).sum();
    }
}

/// Leading singular triplet from a dense SVD.
pub fn top_singular_exact(d: &DMatrix<f64>) -> SingularTriplet {
    let svd = d.clone().svd(true, true);
    let (idx, &sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty matrix");
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    SingularTriplet {
        sigma,
        left: u.column(idx).into_owned(),
        right: v_t.row(idx).transpose(),
        iterations: 0,
    }
}

pub fn nuclear_norm(x: &DMatrix<f64>) -> f64 {
    x.singular_values().iter().sum()
}

/// Projection onto `{X : ‖X‖_* ≤ radius}` by projecting the spectrum.
pub fn project_nuclear_ball(x: &DMatrix<f64>, radius: f64) -> DMatrix<f64> {
    let mut svd = x.clone().svd(true, true);
    if svd.singular_values.iter().sum::<f64>() <= radius {
        return x.clone();
    }
    let projected = project_capped_simplex(svd.singular_values.as_slice(), radius);
    svd.singular_values.copy_from_slice(&projected);
    svd.recompose().expect("U and Vᵀ were computed")
}
