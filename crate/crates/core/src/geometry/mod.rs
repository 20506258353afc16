//! Constraint sets with linear minimization oracles.
//!
//! Every set carries a center `c` and radii with `B(c, r) ⊆ K ⊆ B(c, R)`.
//! For the ball, the shifted simplex and the nuclear-norm ball the center is
//! the origin; the box polytope `{0 ≤ x ≤ 1, Ax ≤ 1}` has the origin on its
//! boundary, so its center is the Chebyshev center found by linear
//! programming. Shrinking `(1−α)K` always contracts toward the center.

mod lp;
pub mod projections;
mod sampling;
pub mod spectral;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

pub use projections::{project_capped_simplex, DykstraOptions};
pub use sampling::{sample_unit_ball, sample_unit_sphere};
pub use spectral::PowerIteration;

use crate::error::check_dim;
use crate::{Error, Point, Result};

/// Default absolute tolerance for membership tests.
pub const CONTAINS_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum SetKind {
    /// Euclidean ball centered at the origin.
    Ball { radius: f64 },
    /// `{x : 0 ≤ x ≤ 1, Ax ≤ 1}`; an empty `A` is the unit box.
    BoxPolytope { a: DMatrix<f64> },
    /// `{y : −1 ≤ y(i) ≤ 2n−1, Σ y(i) ≤ n}`, the image of the capped simplex
    /// under `y = 2n·x − 1`.
    ShiftedSimplex,
    /// `{X ∈ R^{rows×cols} : ‖X‖_* ≤ radius}`, flattened row-major.
    NuclearNormBall {
        radius: f64,
        rows: usize,
        cols: usize,
        power: PowerIteration,
    },
}

#[derive(Debug, Clone)]
pub struct ConstraintSet {
    kind: SetKind,
    dim: usize,
    center: Point,
    inner_radius: f64,
    outer_radius: f64,
    diameter: f64,
}

/// Mutable scratch state for repeated LMO calls: warm-start vector for the
/// nuclear-norm power iteration and counters for reporting.
#[derive(Debug, Clone, Default)]
pub struct LmoWorkspace {
    hint: Option<DVector<f64>>,
    pub calls: u64,
    pub power_iterations: u64,
    /// Power-iteration failures that were resolved with a dense SVD.
    pub fallbacks: u64,
}

/// Operations shared by a constraint set and its shrunken copies.
pub trait ConvexBody {
    fn dim(&self) -> usize;

    /// `argmin_{x ∈ K} ⟨direction, x⟩`. Reports power-iteration failure as an error.
    fn lmo(&self, direction: &Point) -> Result<Point>;

    /// Same as [`ConvexBody::lmo`] but warm-starts from `ws` and falls back to a
    /// dense SVD (counted in `ws.fallbacks`) if power iteration stalls.
    fn lmo_with(&self, direction: &Point, ws: &mut LmoWorkspace) -> Result<Point>;

    fn contains(&self, x: &Point, tol: f64) -> Result<bool>;

    /// Euclidean projection.
    fn project(&self, x: &Point) -> Result<Point>;
}

impl ConstraintSet {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ball needs dim ≥ 1 and radius > 0 (dim {dim}, radius {radius})"
            )));
        }
        Ok(Self {
            kind: SetKind::Ball { radius },
            dim,
            center: Point::zeros(dim),
            inner_radius: radius,
            outer_radius: radius,
            diameter: 2.0 * radius,
        })
    }

    /// `{0 ≤ x ≤ 1, Ax ≤ 1}` with `A` of shape `m × n`.
    pub fn box_polytope(a: DMatrix<f64>) -> Result<Self> {
        let n = a.ncols();
        if n == 0 {
            return Err(Error::InvalidParameter("box polytope needs n ≥ 1".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "constraint matrix has non-finite entries".into(),
            ));
        }
        let (center, inner_radius) = chebyshev_center(&a)?;
        // K lies in the unit box, so the farthest box corner bounds R
        let outer_radius = center.iter().map(|&c| c.max(1.0 - c).powi(2)).sum::<f64>().sqrt();
        let diameter = (n as f64).sqrt().min(2.0 * outer_radius);
        Ok(Self {
            kind: SetKind::BoxPolytope { a },
            dim: n,
            center,
            inner_radius,
            outer_radius,
            diameter,
        })
    }

    pub fn unit_box(n: usize) -> Result<Self> {
        Self::box_polytope(DMatrix::zeros(0, n))
    }

    pub fn shifted_simplex(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("shifted simplex needs n ≥ 1".into()));
        }
        let nf = n as f64;
        // facet distances from the origin: 1, 2n−1 and n/√n
        let inner_radius = 1.0f64.min(2.0 * nf - 1.0).min(nf.sqrt());
        // vertices are −1 and 2n·e_i − 1
        let outer_radius = ((2.0 * nf - 1.0).powi(2) + (nf - 1.0)).sqrt().max(nf.sqrt());
        let diameter = if n >= 2 { 2.0 * 2f64.sqrt() * nf } else { 2.0 * nf };
        Ok(Self {
            kind: SetKind::ShiftedSimplex,
            dim: n,
            center: Point::zeros(n),
            inner_radius,
            outer_radius,
            diameter,
        })
    }

    /// Nuclear-norm ball of radius `k` with default radii `r = k/rows`,
    /// `R = k`, `D = 2k` (see [`ConstraintSet::with_radii`]).
    pub fn nuclear_norm_ball(k: f64, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "nuclear-norm ball needs positive shape and radius (k {k}, {rows}×{cols})"
            )));
        }
        let dim = rows * cols;
        Ok(Self {
            kind: SetKind::NuclearNormBall {
                radius: k,
                rows,
                cols,
                power: PowerIteration::default(),
            },
            dim,
            center: Point::zeros(dim),
            inner_radius: k / rows as f64,
            outer_radius: k,
            diameter: 2.0 * k,
        })
    }

    /// Overrides the geometry constants of a nuclear-norm ball after checking
    /// them against the analytic bounds `r ≤ k/√min(rows, cols)`, `R ≥ k`,
    /// `D ≤ 2R`.
    pub fn with_radii(mut self, inner: f64, outer: f64, diameter: f64) -> Result<Self> {
        let SetKind::NuclearNormBall { radius, rows, cols, .. } = self.kind else {
            return Err(Error::InvalidParameter(
                "radii are derived analytically for this set kind".into(),
            ));
        };
        let max_inner = radius / (rows.min(cols) as f64).sqrt();
        if !(inner > 0.0
            && inner <= max_inner + 1e-12
            && outer >= radius
            && diameter <= 2.0 * outer
            && diameter >= 2.0 * radius)
        {
            return Err(Error::InvalidParameter(format!(
                "radii (r {inner}, R {outer}, D {diameter}) inconsistent with a nuclear ball of radius {radius}"
            )));
        }
        self.inner_radius = inner;
        self.outer_radius = outer;
        self.diameter = diameter;
        Ok(self)
    }

    /// Power-iteration settings for the nuclear-norm LMO.
    pub fn with_power_iteration(mut self, opts: PowerIteration) -> Self {
        if let SetKind::NuclearNormBall { power, .. } = &mut self.kind {
            *power = opts;
        }
        self
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    /// `r` with `B(center, r) ⊆ K`.
    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    /// `R` with `K ⊆ B(center, R)`.
    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// Upper bound on the diameter of `K`.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Shape of matrix-valued sets.
    pub fn matrix_shape(&self) -> Option<(usize, usize)> {
        match self.kind {
            SetKind::NuclearNormBall { rows, cols, .. } => Some((rows, cols)),
            _ => None,
        }
    }

    pub fn shrink(&self, alpha: f64) -> Result<ShrunkenSet<'_>> {
        ShrunkenSet::new(self, alpha)
    }

    /// A random feasible point: either an LMO vertex for a random direction or
    /// a random convex combination of the center with a few such vertices.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        let vertices = 1 + rng.random_range(0..3);
        let mut points = Vec::with_capacity(vertices + 1);
        for _ in 0..vertices {
            let direction = match rng.random_range(0..10) {
                0 => Point::from_element(self.dim, 1.0),
                1 => Point::from_element(self.dim, -1.0),
                _ => Point::from_fn(self.dim, |_, _| rng.sample(StandardNormal)),
            };
            points.push(self.lmo_impl(&direction, Some(&mut LmoWorkspace::default()))?);
        }
        if rng.random_bool(0.25) {
            return Ok(points.swap_remove(0));
        }
        points.push(self.center.clone());
        let weights: Vec<f64> = points.iter().map(|_| Exp1.sample(rng)).collect();
        let total: f64 = weights.iter().sum();
        let mut out = Point::zeros(self.dim);
        for (p, w) in points.iter().zip(&weights) {
            out.axpy(w / total, p, 1.0);
        }
        Ok(out)
    }

    fn lmo_impl(&self, direction: &Point, ws: Option<&mut LmoWorkspace>) -> Result<Point> {
        check_dim(self.dim, direction.len())?;
        match &self.kind {
            SetKind::Ball { radius } => {
                let norm = direction.norm();
                if norm == 0.0 {
                    Ok(Point::zeros(self.dim))
                } else {
                    Ok(direction * (-radius / norm))
                }
            }
            SetKind::BoxPolytope { a } => {
                if a.nrows() == 0 {
                    return Ok(direction.map(|d| if d < 0.0 { 1.0 } else { 0.0 }));
                }
                let stacked = box_rows(a);
                let ones = vec![1.0; stacked.nrows()];
                let x = lp::minimize(direction.as_slice(), &stacked, &ones)?;
                Ok(Point::from_vec(x))
            }
            SetKind::ShiftedSimplex => {
                let n = self.dim as f64;
                let (idx, &min) = direction
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .expect("dimension ≥ 1");
                let mut y = Point::from_element(self.dim, -1.0);
                if min < 0.0 {
                    y[idx] = 2.0 * n - 1.0;
                }
                Ok(y)
            }
            SetKind::NuclearNormBall {
                radius,
                rows,
                cols,
                power,
            } => {
                let d = DMatrix::from_row_slice(*rows, *cols, direction.as_slice());
                if d.iter().all(|&v| v == 0.0) {
                    return Ok(Point::zeros(self.dim));
                }
                let triplet = match ws {
                    None => power.top_singular(&d, None)?,
                    Some(ws) => {
                        ws.calls += 1;
                        match power.top_singular(&d, ws.hint.as_ref()) {
                            Ok(t) => {
                                ws.power_iterations += t.iterations as u64;
                                ws.hint = Some(t.right.clone());
                                t
                            }
                            Err(Error::PowerIterationNotConverged { iterations, .. }) => {
                                ws.power_iterations += iterations as u64;
                                ws.fallbacks += 1;
                                let t = spectral::top_singular_exact(&d);
                                ws.hint = Some(t.right.clone());
                                t
                            }
                            Err(e) => return Err(e),
                        }
                    }
                };
                // argmin ⟨D, X⟩ over the ball is −k·u vᵀ for the leading pair
                let x = &triplet.left * triplet.right.transpose() * (-radius);
                Ok(flatten_row_major(&x))
            }
        }
    }
}

impl ConvexBody for ConstraintSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn lmo(&self, direction: &Point) -> Result<Point> {
        self.lmo_impl(direction, None)
    }

    fn lmo_with(&self, direction: &Point, ws: &mut LmoWorkspace) -> Result<Point> {
        self.lmo_impl(direction, Some(ws))
    }

    fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Ok(false);
        }
        Ok(match &self.kind {
            SetKind::Ball { radius } => x.norm() <= radius + tol,
            SetKind::BoxPolytope { a } => projections::box_polytope_violation(a, x) <= tol,
            SetKind::ShiftedSimplex => {
                let upper = 2.0 * self.dim as f64 - 1.0;
                x.iter().all(|&v| v >= -1.0 - tol && v <= upper + tol) && x.sum() <= self.dim as f64 + tol
            }
            SetKind::NuclearNormBall { radius, rows, cols, .. } => {
                let m = DMatrix::from_row_slice(*rows, *cols, x.as_slice());
                spectral::nuclear_norm(&m) <= radius + tol
            }
        })
    }

    fn project(&self, x: &Point) -> Result<Point> {
        check_dim(self.dim, x.len())?;
        match &self.kind {
            SetKind::Ball { radius } => {
                let norm = x.norm();
                Ok(if norm <= *radius {
                    x.clone()
                } else {
                    x * (radius / norm)
                })
            }
            SetKind::BoxPolytope { a } => {
                if a.nrows() == 0 {
                    return Ok(x.map(|v| v.clamp(0.0, 1.0)));
                }
                if projections::box_polytope_violation(a, x) <= 0.0 {
                    return Ok(x.clone());
                }
                projections::dykstra_box_polytope(a, x, DykstraOptions::default())
            }
            SetKind::ShiftedSimplex => {
                let two_n = 2.0 * self.dim as f64;
                let unshifted: Vec<f64> = x.iter().map(|&y| (y + 1.0) / two_n).collect();
                let p = project_capped_simplex(&unshifted, 1.0);
                let upper = two_n - 1.0;
                Ok(Point::from_iterator(
                    self.dim,
                    p.iter().map(|&v| (two_n * v - 1.0).clamp(-1.0, upper)),
                ))
            }
            SetKind::NuclearNormBall { radius, rows, cols, .. } => {
                let m = DMatrix::from_row_slice(*rows, *cols, x.as_slice());
                Ok(flatten_row_major(&spectral::project_nuclear_ball(&m, *radius)))
            }
        }
    }
}

/// `(1−α)K` contracted toward the center of `K`.
#[derive(Debug, Clone, Copy)]
pub struct ShrunkenSet<'a> {
    base: &'a ConstraintSet,
    alpha: f64,
}

impl<'a> ShrunkenSet<'a> {
    pub fn new(base: &'a ConstraintSet, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "shrink factor α = {alpha} must lie in [0, 1)"
            )));
        }
        Ok(Self { base, alpha })
    }

    pub fn base(&self) -> &ConstraintSet {
        self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn scale(&self) -> f64 {
        1.0 - self.alpha
    }

    /// Maps a point of `K` into `(1−α)K`.
    pub fn contract(&self, p: &Point) -> Point {
        let c = self.base.center();
        c + (p - c) * self.scale()
    }

    /// Inverse of [`ShrunkenSet::contract`].
    pub fn expand(&self, x: &Point) -> Point {
        let c = self.base.center();
        c + (x - c) / self.scale()
    }
}

impl ConvexBody for ShrunkenSet<'_> {
    fn dim(&self) -> usize {
        self.base.dim
    }

    fn lmo(&self, direction: &Point) -> Result<Point> {
        Ok(self.contract(&self.base.lmo(direction)?))
    }

    fn lmo_with(&self, direction: &Point, ws: &mut LmoWorkspace) -> Result<Point> {
        Ok(self.contract(&self.base.lmo_with(direction, ws)?))
    }

    fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        check_dim(self.base.dim, x.len())?;
        self.base.contains(&self.expand(x), tol / self.scale())
    }

    fn project(&self, x: &Point) -> Result<Point> {
        check_dim(self.base.dim, x.len())?;
        Ok(self.contract(&self.base.project(&self.expand(x))?))
    }
}

/// Row-major flattening of a matrix.
pub fn flatten_row_major(m: &DMatrix<f64>) -> Point {
    Point::from_iterator(m.len(), m.transpose().iter().copied())
}

fn box_rows(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    DMatrix::from_fn(n + m, n, |i, j| {
        if i < n {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else {
            a[(i - n, j)]
        }
    })
}

/// Largest ball inside `{0 ≤ x ≤ 1, Ax ≤ 1}`: maximize ρ subject to
/// `ρ ≤ c_j`, `c_j + ρ ≤ 1`, `a_iᵀc + ‖a_i‖ρ ≤ 1`.
fn chebyshev_center(a: &DMatrix<f64>) -> Result<(Point, f64)> {
    let (m, n) = a.shape();
    let vars = n + 1;
    let mut rows = DMatrix::zeros(2 * n + m, vars);
    let mut rhs = vec![0.0; 2 * n + m];
    for j in 0..n {
        rows[(j, j)] = -1.0;
        rows[(j, n)] = 1.0;
        rows[(n + j, j)] = 1.0;
        rows[(n + j, n)] = 1.0;
        rhs[n + j] = 1.0;
    }
    for i in 0..m {
        for j in 0..n {
            rows[(2 * n + i, j)] = a[(i, j)];
        }
        rows[(2 * n + i, n)] = a.row(i).norm();
        rhs[2 * n + i] = 1.0;
    }
    let mut cost = vec![0.0; vars];
    cost[n] = -1.0;
    let sol = lp::minimize(&cost, &rows, &rhs)?;
    let rho = sol[n];
    if rho <= 1e-12 {
        return Err(Error::InvalidParameter("box polytope has an empty interior".into()));
    }
    Ok((Point::from_column_slice(&sol[..n]), rho))
}
