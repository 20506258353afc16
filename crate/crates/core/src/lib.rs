//! Projection-free bandit convex optimization.
//!
//! The learner plays `y_t = x_t + δu_t`, observes only `f_t(y_t)`, builds a
//! one-point gradient estimate, and moves `x_t` by a conditional-gradient
//! step on a regularized leader objective. The only access to the feasible
//! set is a linear minimization oracle.

pub mod analysis;
mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod learners;
pub mod losses;

pub use error::{Error, Result};
pub use geometry::{ConstraintSet, ConvexBody, LmoWorkspace, SetKind, ShrunkenSet};

/// Dense real vector; matrix-valued points are flattened row-major.
pub type Point = nalgebra::DVector<f64>;
