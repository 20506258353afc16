//! Dense tableau simplex for small linear programs of the form
//! `min cᵀx  s.t.  Ax ≤ b, x ≥ 0` with `b ≥ 0`.
//!
//! `b ≥ 0` makes the all-slack basis feasible, so no phase one is needed.
//! Every program solved in this crate (box polytope LMO, Chebyshev center)
//! has that shape.

use nalgebra::DMatrix;

use crate::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;

/// Solves the program and returns the optimal `x`.
pub(crate) fn minimize(cost: &[f64], a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    crate::error::check_dim(n, cost.len())?;
    crate::error::check_dim(m, b.len())?;
    if let Some(&neg) = b.iter().find(|&&v| v < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "simplex needs a non-negative right-hand side, found {neg}"
        )));
    }

    let width = n + m + 1;
    let rhs = width - 1;
    // rows 0..m are constraints, row m is the reduced-cost row
    let mut tab = vec![0.0; (m + 1) * width];
    for i in 0..m {
        for j in 0..n {
            tab[i * width + j] = a[(i, j)];
        }
        tab[i * width + n + i] = 1.0;
        tab[i * width + rhs] = b[i];
    }
    tab[m * width..m * width + n].copy_from_slice(cost);
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_pivots = 50 * (n + m).max(1);
    let mut degenerate_run = 0usize;
    let mut use_bland = false;
    for _ in 0..max_pivots {
        let obj = &tab[m * width..m * width + rhs];
        let entering = if use_bland {
            obj.iter().position(|&c| c < -PIVOT_EPS)
        } else {
            obj.iter()
                .enumerate()
                .filter(|(_, &c)| c < -PIVOT_EPS)
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(j, _)| j)
        };
        let Some(col) = entering else {
            let mut x = vec![0.0; n];
            for (i, &var) in basis.iter().enumerate() {
                if var < n {
                    x[var] = tab[i * width + rhs].max(0.0);
                }
            }
            return Ok(x);
        };

        // ratio test; ties go to the smallest basic index (Bland)
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = tab[i * width + col];
            if coef > PIVOT_EPS {
                let ratio = tab[i * width + rhs] / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - 1e-14 || (ratio <= best + 1e-14 && basis[i] < basis[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((row, ratio)) = leave else {
            return Err(Error::UnboundedProgram);
        };
        if ratio <= 1e-14 {
            degenerate_run += 1;
            if degenerate_run > n + m {
                use_bland = true;
            }
        } else {
            degenerate_run = 0;
        }
        pivot(&mut tab, width, m + 1, row, col);
        basis[row] = col;
    }
    Err(Error::PivotLimit(max_pivots))
}

fn pivot(tab: &mut [f64], width: usize, rows: usize, row: usize, col: usize) {
    let p = tab[row * width + col];
    for v in &mut tab[row * width..(row + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = tab[row * width..(row + 1) * width].to_vec();
    for i in 0..rows {
        if i == row {
            continue;
        }
        let factor = tab[i * width + col];
        if factor != 0.0 {
            for (v, &pr) in tab[i * width..(i + 1) * width].iter_mut().zip(&pivot_row) {
                *v -= factor * pr;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_two_variable_program() {
        // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6  -> (1.6, 1.2)
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 1.0]);
        let x = minimize(&[-1.0, -1.0], &a, &[4.0, 6.0]).unwrap();
        assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn non_negative_cost_stays_at_origin() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = minimize(&[1.0, 0.0], &a, &[1.0]).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn unbounded_program_is_reported() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        assert!(matches!(
            minimize(&[0.0, -1.0], &a, &[1.0]),
            Err(Error::UnboundedProgram)
        ));
    }

    #[test]
    fn degenerate_rows_terminate() {
        // Chebyshev-style program with zero right-hand sides
        let a = DMatrix::from_row_slice(
            5,
            3,
            &[
                -1.0,
                0.0,
                1.0, //
                0.0,
                -1.0,
                1.0, //
                1.0,
                0.0,
                1.0, //
                0.0,
                1.0,
                1.0, //
                1.0,
                1.0,
                2.0f64.sqrt(),
            ],
        );
        let x = minimize(&[0.0, 0.0, -1.0], &a, &[0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        // optimum radius for the triangle-capped unit square
        let rho = 1.0 / (2.0 + 2.0f64.sqrt());
        assert!((x[2] - rho).abs() < 1e-10, "{x:?}");
    }
}
