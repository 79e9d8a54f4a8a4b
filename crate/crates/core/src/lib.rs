//! Entanglement dephasing of propagating two-mode squeezed microwave states.
//!
//! Two squeezed thermal modes from independent parametric amplifiers are
//! mixed on a balanced beam splitter. Delaying one output path by `τ`
//! degrades the cross-correlations through the measurement filter's sinc
//! kernel; this crate evaluates the resulting `g²(τ)` and negativity kernel
//! `N_k(τ)` in closed form and through independent covariance and Monte
//! Carlo routes, fits both laws to traces, and turns the delayed resource
//! into protocol fidelities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dephasing;
pub mod dualpath;
pub mod error;
pub mod estimation;
pub mod gaussian;
pub mod jpa;
pub mod lm;
pub mod protocols;

pub use dephasing::{CurveKind, CurvePoint, DephasingCurve, FilterSpec};
pub use error::{Error, Result};
pub use gaussian::{CovarianceMatrix, SymplecticTransform};
pub use jpa::{JpaParams, SqueezingLevel};
