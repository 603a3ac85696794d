//! Existence and localisation certificates for nonlocal Kirchhoff-type
//! boundary value problems with variable-exponent norms.

// `!(x > 0.0)` and friends reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod existence;
pub mod expr;
pub mod greens;
pub mod nonlocal;
pub mod problem;
pub mod quadrature;
pub mod report;
pub mod search;
pub mod solver;
pub mod vexp;
