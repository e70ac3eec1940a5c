//! Construction and numerical verification of the free quadratic harness,
//! the Markov process with linear conditional means, quadratic conditional
//! variances, and parameter γ = −στ.
//!
//! The crate builds everything from the explicit three-term recurrences of
//! the orthogonal martingale polynomials: spectral measures through
//! Cauchy–Stieltjes inversion ([`spectral`]), transition kernels, exact
//! sampling and path simulation ([`kernel`]), the operator representation
//! and its commutation identities ([`operator`]), and nested-quadrature
//! verification of the harness property itself ([`harnesscheck`]).

pub mod error;
pub mod harnesscheck;
pub mod kernel;
pub mod operator;
pub mod params;
pub mod recurrence;
pub mod spectral;

pub use error::{Error, Result};
pub use params::{CaseId, CaseTag, DerivedParams, HarnessParams, Reduction, StateSpace};
