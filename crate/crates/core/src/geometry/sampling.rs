//! Uniform draws from the unit sphere and the unit ball.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::Point;

/// Uniform draw from the unit sphere in `n` dimensions (normalized Gaussian).
///
/// Panics if `n == 0`.
pub fn sample_unit_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Point {
    assert!(n >= 1, "sphere dimension must be at least 1");
    loop {
        let v = Point::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        // all-zero draws have measure zero; redraw instead of dividing by zero
        if norm > 0.0 && norm.is_finite() {
            return v / norm;
        }
    }
}

/// Uniform draw from the unit ball: a sphere direction scaled by `U^(1/n)`.
pub fn sample_unit_ball<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Point {
    let dir = sample_unit_sphere(n, rng);
    let radius = rng.random::<f64>().powf(1.0 / n as f64);
    dir * radius
}
