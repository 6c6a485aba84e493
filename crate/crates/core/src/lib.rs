//! Certified simple-spectrum perturbations of matrix tuples and explicit
//! Kronecker-sum inverses of two-term Kronecker binomials.

pub mod cli;
pub mod error;
pub mod kron;
pub mod matcore;
pub mod perturb;
pub mod selftest;
pub mod spectra;

pub use error::{Error, Result};
pub use matcore::{FieldTag, Matrix, RandomSource, C64};
