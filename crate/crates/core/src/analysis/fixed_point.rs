use nalgebra::DMatrix;

use crate::losses::{Loss, LossFunction, LossSequence};
use crate::{ConstraintSet, ConvexBody, Error, LmoWorkspace, Point, Result};

/// Default Frank-Wolfe iteration budget for the comparator.
pub const FW_ITERATIONS: usize = 2000;
/// Relative duality gap below which the comparator counts as converged.
pub const RELATIVE_GAP: f64 = 1e-3;

/// `Σ_t f_t` in a form that is cheap to evaluate repeatedly.
#[derive(Debug, Clone)]
pub enum SummedLoss {
    /// `½xᵀAx + wᵀx + b`.
    Quadratic {
        a: DMatrix<f64>,
        w: Point,
        b: f64,
    },
    /// `Σ_i ½c_i x_i² − s_i x_i + b`.
    Separable {
        c: Point,
        s: Point,
        b: f64,
    },
    General(Vec<Loss>),
}

impl SummedLoss {
    pub fn from_sequence(losses: &LossSequence) -> Result<Self> {
        let first = losses
            .as_slice()
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty loss sequence".into()))?;
        let n = first.dim();
        let all_quadratic = losses.iter().all(|l| matches!(l, Loss::Quadratic(_) | Loss::Linear(_)));
        let all_matrix = losses.iter().all(|l| matches!(l, Loss::MatrixCompletion(_)));
        if all_quadratic {
            let (mut a, mut w, mut b) = (DMatrix::zeros(n, n), Point::zeros(n), 0.0);
            for loss in losses.iter() {
                match loss {
                    Loss::Quadratic(q) => {
                        a += q.matrix();
                        w += q.linear();
                    }
                    Loss::Linear(l) => {
                        w += &l.a;
                        b += l.b;
                    }
                    _ => unreachable!(),
                }
            }
            Ok(SummedLoss::Quadratic { a, w, b })
        } else if all_matrix {
            let (mut c, mut s, mut b) = (Point::zeros(n), Point::zeros(n), 0.0);
            for loss in losses.iter() {
                let Loss::MatrixCompletion(m) = loss else {
                    unreachable!()
                };
                let cols = m.target().ncols();
                for &idx in m.mask() {
                    let i = idx as usize;
                    let target = m.target()[(i / cols, i % cols)];
                    c[i] += 1.0;
                    s[i] += target;
                    b += 0.5 * target * target;
                }
            }
            Ok(SummedLoss::Separable { c, s, b })
        } else {
            Ok(SummedLoss::General(losses.as_slice().to_vec()))
        }
    }

    pub fn eval(&self, x: &Point) -> Result<f64> {
        match self {
            SummedLoss::Quadratic { a, w, b } => Ok(0.5 * x.dot(&(a * x)) + w.dot(x) + b),
            SummedLoss::Separable { c, s, b } => Ok(x
                .iter()
                .zip(c.iter().zip(s.iter()))
                .map(|(x, (c, s))| 0.5 * c * x * x - s * x)
                .sum::<f64>()
                + b),
            SummedLoss::General(losses) => losses.iter().map(|l| l.eval(x)).sum(),
        }
    }

    pub fn grad(&self, x: &Point) -> Result<Point> {
        match self {
            SummedLoss::Quadratic { a, w, .. } => Ok(a * x + w),
            SummedLoss::Separable { c, s, .. } => Ok(c.component_mul(x) - s),
            SummedLoss::General(losses) => {
                let mut g = Point::zeros(x.len());
                for l in losses {
                    g += l.grad(x)?;
                }
                Ok(g)
            }
        }
    }

    /// `dᵀ∇²F d` for quadratic sums.
    fn curvature(&self, d: &Point) -> Option<f64> {
        match self {
            SummedLoss::Quadratic { a, .. } => Some(d.dot(&(a * d))),
            SummedLoss::Separable { c, .. } => Some(c.iter().zip(d.iter()).map(|(c, d)| c * d * d).sum()),
            SummedLoss::General(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub point: Point,
    /// `Σ_t f_t(point)`, an upper bound on the minimum.
    pub value: f64,
    /// Frank-Wolfe duality gap at `point`.
    pub gap: f64,
    /// Best certified lower bound `max_k (F(x_k) − gap_k)` on the minimum.
    pub lower_bound: f64,
    pub iterations: usize,
    /// `gap ≤ 10⁻³·|value|`.
    pub converged: bool,
    /// For the unit box, the value at the unconstrained minimizer when it is
    /// feasible, as an independent cross-check.
    pub reference: Option<f64>,
}

/// Minimizes `Σ_t f_t` over `set` with the default budget.
pub fn best_fixed_point(losses: &LossSequence, set: &ConstraintSet) -> Result<FixedPoint> {
    best_fixed_point_with(&SummedLoss::from_sequence(losses)?, set, FW_ITERATIONS)
}

pub fn best_fixed_point_with(f: &SummedLoss, set: &ConstraintSet, iterations: usize) -> Result<FixedPoint> {
    let mut fp = frank_wolfe(f, set, set.center(), iterations)?;
    fp.reference = box_reference(f, set)?;
    Ok(fp)
}

/// Away-step Frank-Wolfe (exact line search for quadratic sums, the
/// `2/(k+2)` rule otherwise) with the Frank-Wolfe gap as certificate. The
/// first vertex is the LMO answer for the gradient at `anchor`.
pub fn frank_wolfe<B: ConvexBody + ?Sized>(
    f: &SummedLoss,
    set: &B,
    anchor: &Point,
    iterations: usize,
) -> Result<FixedPoint> {
    let mut ws = LmoWorkspace::default();
    let quadratic = !matches!(f, SummedLoss::General(_));
    let grad0 = f.grad(anchor)?;
    let start = set.lmo_with(&lmo_direction(&grad0), &mut ws)?;
    let mut atoms = vec![start.clone()];
    let mut weights = vec![1.0];
    let mut x = start;

    let mut best_value = f.eval(&x)?;
    let mut best_point = x.clone();
    let mut lower = f64::NEG_INFINITY;
    let mut done = 0;

    for k in 0..iterations {
        done = k + 1;
        let value = f.eval(&x)?;
        let g = f.grad(&x)?;
        let s = set.lmo_with(&lmo_direction(&g), &mut ws)?;
        let fw_gap = g.dot(&(&x - &s)).max(0.0);
        lower = lower.max(value - fw_gap);
        if value <= best_value {
            best_value = value;
            best_point = x.clone();
        }
        if fw_gap <= 1e-12 * value.abs().max(1.0) {
            break;
        }

        if !quadratic {
            let gamma = 2.0 / (k as f64 + 2.0);
            x = &x * (1.0 - gamma) + &s * gamma;
            continue;
        }

        let (away_idx, away_gap) = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (i, g.dot(&(a - &x))))
            .max_by(|p, q| p.1.total_cmp(&q.1))
            .expect("active set is never empty");
        let (d, gamma_max, toward) = if fw_gap >= away_gap || atoms.len() == 1 {
            (&s - &x, 1.0, true)
        } else {
            let w = weights[away_idx];
            (&x - &atoms[away_idx], w / (1.0 - w), false)
        };
        let slope = g.dot(&d);
        let curv = f.curvature(&d).expect("quadratic sum");
        let gamma = if curv > 0.0 {
            (-slope / curv).clamp(0.0, gamma_max)
        } else if slope < 0.0 {
            gamma_max
        } else {
            0.0
        };
        if gamma == 0.0 {
            continue;
        }
        x += &d * gamma;
        if toward {
            if gamma >= 1.0 {
                atoms = vec![s];
                weights = vec![1.0];
            } else {
                weights.iter_mut().for_each(|w| *w *= 1.0 - gamma);
                match atoms.iter().position(|a| (a - &s).amax() <= 1e-12) {
                    Some(i) => weights[i] += gamma,
                    None => {
                        atoms.push(s);
                        weights.push(gamma);
                    }
                }
            }
        } else {
            weights.iter_mut().for_each(|w| *w *= 1.0 + gamma);
            weights[away_idx] -= gamma;
            if gamma >= gamma_max || weights[away_idx] <= 1e-15 {
                atoms.swap_remove(away_idx);
                weights.swap_remove(away_idx);
            }
        }
    }

    // certificate at the returned point
    let g = f.grad(&best_point)?;
    let s = set.lmo_with(&lmo_direction(&g), &mut ws)?;
    let gap = g.dot(&(&best_point - &s)).max(0.0);
    lower = lower.max(best_value - gap);

    Ok(FixedPoint {
        converged: gap <= RELATIVE_GAP * best_value.abs() || gap <= 1e-12,
        reference: None,
        point: best_point,
        value: best_value,
        gap,
        lower_bound: lower,
        iterations: done,
    })
}

fn lmo_direction(g: &Point) -> Point {
    if g.iter().all(|&v| v == 0.0) {
        Point::from_element(g.len(), 1.0)
    } else {
        g.clone()
    }
}

fn box_reference(f: &SummedLoss, set: &ConstraintSet) -> Result<Option<f64>> {
    let (SummedLoss::Quadratic { a, w, .. }, crate::SetKind::BoxPolytope { a: rows }) = (f, set.kind()) else {
        return Ok(None);
    };
    if rows.nrows() > 0 {
        return Ok(None);
    }
    let Some(chol) = a.clone().cholesky() else {
        return Ok(None);
    };
    let x = chol.solve(&(-w));
    if set.contains(&x, 0.0)? {
        Ok(Some(f.eval(&x)?))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{gen_matrix_sequence, gen_quadratic_sequence, LinearLoss, QuadraticLoss};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(v: &[f64]) -> Point {
        Point::from_row_slice(v)
    }

    #[test]
    fn half_norm_on_the_ball() {
        let f = QuadraticLoss::from_factor(&DMatrix::identity(3, 3), Point::zeros(3)).unwrap();
        let seq = LossSequence::new(vec![Loss::Quadratic(f)]);
        let fp = best_fixed_point(&seq, &ConstraintSet::ball(3, 1.0).unwrap()).unwrap();
        assert!(fp.value.abs() < 1e-9 && fp.point.norm() < 1e-4);
        assert!(fp.converged);
    }

    #[test]
    fn linear_on_the_ball() {
        let a = p(&[3.0, -4.0]);
        let seq = LossSequence::new(vec![Loss::Linear(LinearLoss::new(a.clone(), 0.0))]);
        let fp = best_fixed_point(&seq, &ConstraintSet::ball(2, 1.0).unwrap()).unwrap();
        assert!((fp.value + 5.0).abs() < 1e-12);
        assert!((fp.point - (-a / 5.0)).norm() < 1e-12);
        assert_eq!(fp.gap, 0.0);
    }

    #[test]
    fn agrees_with_grid_search_in_two_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let problem = gen_quadratic_sequence(2, 2, 30, &mut rng).unwrap();
        let fp = best_fixed_point(&problem.losses, &problem.set).unwrap();
        let f = SummedLoss::from_sequence(&problem.losses).unwrap();
        let steps = 1000;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps {
                let x = p(&[i as f64 / steps as f64, j as f64 / steps as f64]);
                if problem.set.contains(&x, 0.0).unwrap() {
                    best = best.min(f.eval(&x).unwrap());
                }
            }
        }
        assert!(fp.value <= best + 1e-9);
        assert!((fp.value - best).abs() <= 1e-4 * best.abs().max(1.0));
        assert!(fp.converged);
    }

    #[test]
    fn certificate_bounds_every_feasible_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let problem = gen_quadratic_sequence(6, 4, 200, &mut rng).unwrap();
        let fp = best_fixed_point(&problem.losses, &problem.set).unwrap();
        let f = SummedLoss::from_sequence(&problem.losses).unwrap();
        assert!(fp.lower_bound <= fp.value && fp.value - fp.lower_bound <= fp.gap + 1e-9);
        for _ in 0..500 {
            let x = problem.set.random_point(&mut rng).unwrap();
            assert!(f.eval(&x).unwrap() >= fp.value - fp.gap);
        }
    }

    #[test]
    fn box_minimizer_cross_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let losses = (0..50)
            .map(|_| {
                let g = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
                let w = Point::from_fn(3, |_, _| rng.random_range(-0.3..0.1));
                Loss::Quadratic(QuadraticLoss::from_factor(&g, w).unwrap())
            })
            .collect();
        let seq = LossSequence::new(losses);
        let fp = best_fixed_point(&seq, &ConstraintSet::unit_box(3).unwrap()).unwrap();
        if let Some(reference) = fp.reference {
            assert!((fp.value - reference).abs() <= fp.gap + 1e-9);
        }
    }

    #[test]
    fn separable_sum_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let problem = gen_matrix_sequence(5, 3, 40, &mut rng).unwrap();
        let f = SummedLoss::from_sequence(&problem.losses).unwrap();
        assert!(matches!(f, SummedLoss::Separable { .. }));
        let direct = SummedLoss::General(problem.losses.as_slice().to_vec());
        for _ in 0..10 {
            let x = problem.set.random_point(&mut rng).unwrap();
            let (a, b) = (f.eval(&x).unwrap(), direct.eval(&x).unwrap());
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            assert!((f.grad(&x).unwrap() - direct.grad(&x).unwrap()).norm() <= 1e-9 * b.abs().max(1.0));
        }
        let fp = best_fixed_point(&problem.losses, &problem.set).unwrap();
        assert!(fp.converged, "gap {} value {}", fp.gap, fp.value);
    }
}
