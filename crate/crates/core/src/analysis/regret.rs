use super::fixed_point::{best_fixed_point, FixedPoint};
use crate::harness::RunTrace;
use crate::losses::LossSequence;
use crate::{ConstraintSet, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub horizon: usize,
    pub best_fixed_value: f64,
    pub best_fixed_gap: f64,
    pub best_fixed_converged: bool,
    /// `Σ f_t(y_t) − min_x Σ f_t(x)`.
    pub regret_y: f64,
    /// `Σ f_t(x_t) − min_x Σ f_t(x)`.
    pub regret_x: f64,
}

/// Regret of a trace against an already computed comparator.
pub fn regret_against(trace: &RunTrace, horizon: usize, fixed: &FixedPoint) -> Result<RegretReport> {
    if trace.len() != horizon {
        return Err(Error::LengthMismatch {
            trace: trace.len(),
            losses: horizon,
        });
    }
    Ok(RegretReport {
        horizon,
        best_fixed_value: fixed.value,
        best_fixed_gap: fixed.gap,
        best_fixed_converged: fixed.converged,
        regret_y: trace.cumulative_loss_y() - fixed.value,
        regret_x: trace.cumulative_loss_x() - fixed.value,
    })
}

pub fn compute_regret(trace: &RunTrace, losses: &LossSequence, set: &ConstraintSet) -> Result<RegretReport> {
    if trace.len() != losses.len() {
        return Err(Error::LengthMismatch {
            trace: trace.len(),
            losses: losses.len(),
        });
    }
    regret_against(trace, losses.len(), &best_fixed_point(losses, set)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub used: usize,
    /// Points dropped for a non-positive regret.
    pub skipped: usize,
}

/// Least-squares fit of `log regret = a + b·log T`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, r)| *t > 0.0 && *r > 0.0 && r.is_finite())
        .map(|(t, r)| (t.ln(), r.ln()))
        .collect();
    let skipped = points.len() - logs.len();
    if logs.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "slope fit needs at least 3 positive points, got {}",
            logs.len()
        )));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("slope fit needs distinct horizons".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        used: logs.len(),
        skipped,
    })
}

/// Constants entering the fixed-horizon regret bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub n: f64,
    pub m: f64,
    pub g: f64,
    pub d: f64,
    pub c: f64,
    pub r: f64,
    pub big_r: f64,
}

/// `√2nMD/c²·T^{3/5} + (√2nMD + (5√2/4)DG + 3cG + cRG/r)·T^{4/5}`.
pub fn regret_bound(k: &BoundConstants, horizon: f64) -> f64 {
    let s2 = 2f64.sqrt();
    let nmd = s2 * k.n * k.m * k.d;
    nmd / (k.c * k.c) * horizon.powf(0.6)
        + (nmd + 1.25 * s2 * k.d * k.g + 3.0 * k.c * k.g + k.c * k.big_r * k.g / k.r) * horizon.powf(0.8)
}

/// Anytime bound `β/(1 − 2^{−4/5})·(t+1)^{4/5}` for a fixed-horizon bound `βT^{4/5}`.
pub fn anytime_bound(beta: f64, t: f64) -> f64 {
    beta / (1.0 - 2f64.powf(-0.8)) * (t + 1.0).powf(0.8)
}
