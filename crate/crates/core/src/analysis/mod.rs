//! Comparator, regret, slope fitting, and the numerical checks of the
//! inequalities behind the regret bound.

mod diagnostics;
mod fixed_point;
mod regret;

pub use diagnostics::{
    auxiliary_inequality_scan, diagnostic_suite, epoch_sum_scan, run_level_checks, CheckResult, DiagnosticConfig,
    DiagnosticReport, Violation,
};
pub use fixed_point::{
    best_fixed_point, best_fixed_point_with, frank_wolfe, FixedPoint, SummedLoss, FW_ITERATIONS, RELATIVE_GAP,
};
pub use regret::{
    anytime_bound, compute_regret, fit_slope, regret_against, regret_bound, BoundConstants, RegretReport, SlopeFit,
};
