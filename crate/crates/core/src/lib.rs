//! Dyson-series propagators for Schrödinger equations with potentials of
//! exponential type, `V(x) = Σ_k w_k e^{α_k·x}`.
//!
//! The library evaluates the convergent perturbation series with analytic
//! truncation bounds, the Morse-potential closed forms, the divergent
//! imaginary-mass (heat) continuation, and independent numerical oracles
//! (Crank–Nicolson, finite-difference diagonalization, brute quadrature).

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dyson;
pub mod error;
pub mod field;
pub mod freeprop;
pub mod heat;
pub mod measure;
pub mod morse;
pub mod oracle;
pub mod quad;
pub mod specfun;
pub mod sum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
