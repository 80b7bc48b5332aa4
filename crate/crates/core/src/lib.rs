// NaN must fail range checks, so `!(x > 0.0)` is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod error;
pub mod expr;
pub mod field;
pub mod integrate;
mod lsq;
pub mod powers;
pub mod schrod;
pub mod vekua;

pub use approx::{fit, order_estimate, FitReport, OrderEstimate};
pub use error::{Error, Result};
pub use expr::Expr;
pub use field::{Codomain, Domain, ScalarField, Stencil, C64};
pub use integrate::{Polyline, Quadrature};
pub use powers::{FormalPower, GeneratingSequence, TaylorExpansion};
pub use schrod::{check_condition_s, ConditionSOptions, ConditionSReport, SchrodingerProblem};
pub use vekua::GeneratingPair;
