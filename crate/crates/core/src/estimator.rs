//! One-point gradient estimation and Monte-Carlo probes of the smoothed loss
//! `f̂_δ(x) = E_{v∼B^n}[f(x + δv)]`.

use rand::Rng;

use crate::geometry::{sample_unit_ball, sample_unit_sphere};
use crate::losses::LossFunction;
use crate::{Error, Point, Result};

/// Accepted deviation of `‖u‖` from one.
pub const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    delta: f64,
    n: usize,
}

impl SmoothingParams {
    pub fn new(delta: f64, n: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "smoothing radius δ = {delta} must be positive"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self { delta, n })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// `(n/δ)·f(y)·u`.
pub fn one_point_gradient(f_value: f64, u: &Point, params: SmoothingParams) -> Result<Point> {
    if u.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            got: u.len(),
        });
    }
    let norm = u.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitDirection(norm));
    }
    Ok(u * (params.n as f64 / params.delta * f_value))
}

/// Sample mean with its standard error. For vectors the error is the norm of
/// the per-coordinate standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate<T> {
    pub mean: T,
    pub stderr: f64,
    pub samples: usize,
}

/// Welford accumulator over vectors.
struct Moments {
    count: usize,
    mean: Point,
    m2: Point,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: Point::zeros(dim),
            m2: Point::zeros(dim),
        }
    }

    fn push(&mut self, x: &Point) {
        self.count += 1;
        let k = self.count as f64;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / k;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    fn finish(self) -> McEstimate<Point> {
        let stderr = if self.count > 1 {
            let k = self.count as f64;
            (self.m2.sum() / (k - 1.0) / k).sqrt()
        } else {
            f64::INFINITY
        };
        McEstimate {
            mean: self.mean,
            stderr,
            samples: self.count,
        }
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        Err(Error::InvalidParameter("need at least one Monte-Carlo sample".into()))
    } else {
        Ok(())
    }
}

/// Estimates `f̂_δ(x)` by averaging `f(x + δv)` over uniform ball draws.
pub fn smoothed_value_mc<R: Rng + ?Sized>(
    loss: &dyn LossFunction,
    x: &Point,
    delta: f64,
    samples: usize,
    rng: &mut R,
) -> Result<McEstimate<f64>> {
    check_samples(samples)?;
    let mut acc = Moments::new(1);
    let mut value = Point::zeros(1);
    for _ in 0..samples {
        let v = sample_unit_ball(x.len(), rng);
        value[0] = loss.eval(&(x + v * delta))?;
        acc.push(&value);
    }
    let est = acc.finish();
    Ok(McEstimate {
        mean: est.mean[0],
        stderr: est.stderr,
        samples,
    })
}

/// Estimates `∇f̂_δ(x)` by averaging one-point estimates over sphere draws.
pub fn smoothed_gradient_mc<R: Rng + ?Sized>(
    loss: &dyn LossFunction,
    x: &Point,
    delta: f64,
    samples: usize,
    rng: &mut R,
) -> Result<McEstimate<Point>> {
    check_samples(samples)?;
    let params = SmoothingParams::new(delta, x.len())?;
    let mut acc = Moments::new(x.len());
    for _ in 0..samples {
        let u = sample_unit_sphere(x.len(), rng);
        let value = loss.eval(&(x + &u * delta))?;
        acc.push(&one_point_gradient(value, &u, params)?);
    }
    Ok(acc.finish())
}
