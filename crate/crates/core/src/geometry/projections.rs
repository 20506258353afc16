//! Euclidean projections used by the projection-based baseline.

use nalgebra::DMatrix;

use crate::{Error, Point, Result};

/// Projection onto `{x ≥ 0, Σx ≤ budget}` via the sort-based simplex rule.
pub fn project_capped_simplex(v: &[f64], budget: f64) -> Vec<f64> {
    let clamped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    if clamped.iter().sum::<f64>() <= budget {
        return clamped;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - budget) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Dykstra settings for the box polytope `{0 ≤ x ≤ 1, Ax ≤ 1}`.
#[derive(Debug, Clone, Copy)]
pub struct DykstraOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for DykstraOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_sweeps: 10_000,
        }
    }
}

/// Largest constraint violation of `x` against `{0 ≤ x ≤ 1, Ax ≤ 1}`.
pub(crate) fn box_polytope_violation(a: &DMatrix<f64>, x: &Point) -> f64 {
    let bounds = x.iter().map(|&v| (-v).max(v - 1.0)).fold(0.0f64, f64::max);
    let rows = (a * x).iter().map(|&v| v - 1.0).fold(0.0f64, f64::max);
    bounds.max(rows)
}

/// Dykstra's alternating projections over the unit box and each halfspace
/// `a_iᵀx ≤ 1`.
pub fn dykstra_box_polytope(a: &DMatrix<f64>, x0: &Point, opts: DykstraOptions) -> Result<Point> {
    let n = x0.len();
    let m = a.nrows();
    let rows: Vec<Point> = (0..m).map(|i| a.row(i).transpose()).collect();
    let row_sq: Vec<f64> = rows.iter().map(|r| r.norm_squared()).collect();

    let mut x = x0.clone();
    let mut increments = vec![Point::zeros(n); m + 1];
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_sweeps {
        let prev = x.clone();

        let z = &x + &increments[0];
        let y = z.map(|v| v.clamp(0.0, 1.0));
        increments[0] = &z - &y;
        x = y;

        for (i, row) in rows.iter().enumerate() {
            let z = &x + &increments[i + 1];
            let excess = row.dot(&z) - 1.0;
            let y = if excess > 0.0 && row_sq[i] > 0.0 {
                &z - row * (excess / row_sq[i])
            } else {
                z.clone()
            };
            increments[i + 1] = &z - &y;
            x = y;
        }

        let change = (&x - &prev).norm();
        let violation = box_polytope_violation(a, &x);
        residual = change.max(violation);
        if change <= opts.tol && violation <= 0.1 * opts.tol {
            return Ok(x);
        }
    }
    Err(Error::ProjectionNotConverged {
        sweeps: opts.max_sweeps,
        residual,
    })
}
