//! Numerical laboratory for Hecke eigenvalues of level-one cusp forms: exact
//! eigenform computation, partial and friable sums, the SU(2) random model,
//! harmonic averages and friable Euler products.

pub mod arith;
pub mod cache;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod hecke;
pub mod lfunc;
pub mod moments;
pub mod multimodular;
pub mod ntt;
pub mod poly;
pub mod qseries;
pub mod rho2;
pub mod satotate;
pub mod sums;

pub use error::{LabError, Result};
