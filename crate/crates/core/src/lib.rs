//! Verification toolkit for a multiphase bulk-surface fluid model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod expr;
pub mod geometry;
pub mod numeric;
pub mod constitutive;
pub mod residuals;
pub mod verify_integral;
pub mod fixtures;
pub mod variation;
pub mod thermo;
pub mod bubble;
