use serde::{Deserialize, Serialize};

use crate::{ConstraintSet, ConvexBody, Error, Result};

/// Blend weights `σ_t = t^{−p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSchedule {
    pub exponent: f64,
}

impl SigmaSchedule {
    /// `σ_t = t^{−2/5}`.
    pub const DEFAULT: Self = Self { exponent: 0.4 };

    pub fn at(&self, t: usize) -> f64 {
        (t as f64).powf(-self.exponent)
    }
}

impl Default for SigmaSchedule {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// User overrides of the automatically derived schedules.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Overrides {
    pub c: Option<f64>,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub sigma_exponent: Option<f64>,
    pub fkm_eta: Option<f64>,
    pub fkm_delta: Option<f64>,
    /// Standard deviation of the gradient noise; the dimension by default.
    pub noise_std: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfbcoParams {
    pub horizon: usize,
    pub eta: f64,
    pub delta: f64,
    pub alpha: f64,
    pub c: f64,
    pub sigma: SigmaSchedule,
}

fn check_horizon(horizon: usize) -> Result<f64> {
    if horizon == 0 {
        Err(Error::InvalidParameter("horizon must be at least 1".into()))
    } else {
        Ok(horizon as f64)
    }
}

fn check_alpha(alpha: f64) -> Result<f64> {
    if (0.0..1.0).contains(&alpha) {
        Ok(alpha)
    } else {
        Err(Error::InvalidParameter(format!(
            "shrink factor α = δ/r = {alpha} must lie in [0, 1); lower c or δ"
        )))
    }
}

impl PfbcoParams {
    /// `η = D/(√2·n·M)·T^{−4/5}`, `δ = c·T^{−1/5}`, `α = δ/r`, `σ_t = t^{−2/5}`,
    /// with `c = r/2` unless overridden. An explicit `δ` fixes `c = δ·T^{1/5}`.
    pub fn tuned(set: &ConstraintSet, value_bound: f64, horizon: usize, overrides: &Overrides) -> Result<Self> {
        let t = check_horizon(horizon)?;
        if !(value_bound > 0.0 && value_bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "loss bound M = {value_bound} must be positive"
            )));
        }
        let n = set.dim() as f64;
        let r = set.inner_radius();
        let (c, delta) = match (overrides.delta, overrides.c) {
            (Some(delta), _) => (delta * t.powf(0.2), delta),
            (None, c) => {
                let c = c.unwrap_or(r / 2.0);
                (c, c * t.powf(-0.2))
            }
        };
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "smoothing radius δ = {delta} is invalid"
            )));
        }
        let alpha = check_alpha(delta / r)?;
        let eta = overrides
            .eta
            .unwrap_or(set.diameter() / (2f64.sqrt() * n * value_bound) * t.powf(-0.8));
        let sigma = overrides
            .sigma_exponent
            .map_or(SigmaSchedule::DEFAULT, |exponent| SigmaSchedule { exponent });
        Ok(Self {
            horizon,
            eta,
            delta,
            alpha,
            c,
            sigma,
        })
    }

    /// Shrink factor the schedule would use, without needing `M`.
    pub fn shrink_factor(set: &ConstraintSet, horizon: usize, overrides: &Overrides) -> Result<f64> {
        Self::tuned(set, 1.0, horizon, overrides).map(|p| p.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FkmParams {
    pub horizon: usize,
    pub eta: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl FkmParams {
    /// `η_f = (D/(n·M))·T^{−3/4}·r`, `δ_f = T^{−1/4}·min(r, 1)/2`, `α = δ_f/r`.
    pub fn classical(set: &ConstraintSet, value_bound: f64, horizon: usize, overrides: &Overrides) -> Result<Self> {
        let t = check_horizon(horizon)?;
        if !(value_bound > 0.0 && value_bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "loss bound M = {value_bound} must be positive"
            )));
        }
        let n = set.dim() as f64;
        let r = set.inner_radius();
        let delta = overrides.fkm_delta.unwrap_or(t.powf(-0.25) * r.min(1.0) / 2.0);
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "smoothing radius δ = {delta} is invalid"
            )));
        }
        let alpha = check_alpha(delta / r)?;
        let eta = overrides
            .fkm_eta
            .unwrap_or(set.diameter() / (n * value_bound) * t.powf(-0.75) * r);
        Ok(Self {
            horizon,
            eta,
            delta,
            alpha,
        })
    }

    pub fn shrink_factor(set: &ConstraintSet, horizon: usize, overrides: &Overrides) -> Result<f64> {
        Self::classical(set, 1.0, horizon, overrides).map(|p| p.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_step_weight() {
        let ball = ConstraintSet::ball(10, 1.0).unwrap();
        let p = PfbcoParams::tuned(&ball, 1.0, 100_000, &Overrides::default()).unwrap();
        assert!((p.eta - 1.41421e-5).abs() < 1e-10);
        let identity = p.eta * 2f64.sqrt() * 10.0 * 1e5f64.powf(0.8) / 2.0;
        assert!((identity - 1.0).abs() < 1e-14);
        assert_eq!(p.c, 0.5);
        assert!((p.delta - 0.5 * 1e5f64.powf(-0.2)).abs() < 1e-15);
        assert_eq!(p.alpha, p.delta);
    }

    #[test]
    fn sigma_identity() {
        for t in [1, 2, 17, 1000, 99_999] {
            let s = SigmaSchedule::DEFAULT.at(t);
            assert!((s * (t as f64).powf(0.4) - 1.0).abs() < 1e-14);
        }
        assert_eq!(SigmaSchedule::DEFAULT.at(1), 1.0);
    }

    #[test]
    fn shrink_must_stay_below_one() {
        let ball = ConstraintSet::ball(3, 1.0).unwrap();
        let too_big = Overrides {
            c: Some(2.0),
            ..Default::default()
        };
        assert!(PfbcoParams::tuned(&ball, 1.0, 1, &too_big).is_err());
        assert!(PfbcoParams::tuned(&ball, 1.0, 0, &Overrides::default()).is_err());
        assert!(PfbcoParams::tuned(&ball, 0.0, 10, &Overrides::default()).is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let ball = ConstraintSet::ball(2, 1.0).unwrap();
        let o = Overrides {
            eta: Some(0.01),
            delta: Some(0.1),
            ..Default::default()
        };
        let p = PfbcoParams::tuned(&ball, 5.0, 32, &o).unwrap();
        assert_eq!((p.eta, p.delta, p.alpha), (0.01, 0.1, 0.1));
        assert!((p.c - 0.2).abs() < 1e-15);
    }

    #[test]
    fn fkm_classical_schedule() {
        let ball = ConstraintSet::ball(4, 1.0).unwrap();
        let p = FkmParams::classical(&ball, 2.0, 10_000, &Overrides::default()).unwrap();
        assert!((p.eta - 2.0 / 8.0 * 1e-3).abs() < 1e-15);
        assert!((p.delta - 0.05).abs() < 1e-15);
        assert_eq!(p.alpha, p.delta);
    }
}
