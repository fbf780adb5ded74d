//! Analysis and simulation of piecewise-smooth vector fields on ℝ³ whose
//! switching set is the 2-cross `{x1·x2 = 0}`.
//!
//! The four quadrant fields are combined by Filippov's convention on the
//! codimension-one strata. At the codimension-two stratum `Σ00 = {x1 = x2 = 0}`
//! the field is regularized in both switching variables, blown up, and the
//! resulting planar slow system decides whether `Σ00` carries sliding.

pub mod bilinear;
pub mod codim2;
pub mod error;
pub mod expr;
pub mod field;
pub mod filippov;
pub mod integrator;
pub mod model;
pub mod ode;
pub mod quadratic;
pub mod regularization;

pub use error::{Error, Result};
pub use expr::{parse_expression, Expr};
pub use field::{convex_weight, stratum_of, PiecewiseField, SignPair, SmoothField3, Stratum, Transition};
pub use model::parse_model;
pub use regularization::Regime;
