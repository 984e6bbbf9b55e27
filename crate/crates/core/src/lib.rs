//! Numerical laboratory for the periodic cubic nonlinear Schrodinger equation:
//! periodic fields, NLS and hierarchy flows, conserved functionals, the
//! Zakharov-Shabat spectrum and diagnostics of isospectral tori.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod flows;
pub mod functionals;
pub mod oracle;
pub mod potential;
pub mod report;
pub mod roots;
pub mod torus;
pub mod zs;

pub use error::{Error, Result};
pub use field::{Grid, Norm, PeriodicField, C64};
pub use potential::Potential;
pub use report::{ExperimentReport, Outcome, Status};
