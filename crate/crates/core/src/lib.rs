//! Numerical laboratory for a beam splitter with second-order nonlinearity.

pub mod analytic;
pub mod cli;
pub mod constraints;
pub mod error;
pub mod fock;
pub mod harness;
pub mod modemap;
pub mod observables;
pub mod residual;

pub use error::{LabError, Result};
