//! Optimal signed kernels for nonparametric density estimation.
//!
//! The crate is split along the lines of the computation:
//!
//! * [`orthopoly`]: Legendre polynomials, dilations and the moment constant `μ(k)`.
//! * [`quadrature`]: Gauss–Legendre rules, the integration oracle for every moment check.
//! * [`kernels`]: closed-form polynomial, fractional-order and derivative kernels.
//! * [`variational`]: an independent equality-constrained QP solver over polynomial
//!   kernels and a randomized perturbation test of optimality.
//! * [`estimator`]: Parzen–Rosenblatt, recursive Wolverton–Wagner, derivative,
//!   log-transformed and product estimators, bandwidth rules and a MISE harness.

pub mod error;
pub mod estimator;
pub mod kernels;
pub mod numfmt;
pub mod orthopoly;
pub mod quadrature;
pub mod variational;

pub use error::{Error, Result};
pub use kernels::{AnyKernel, FracKernel, Kernel, KernelConstraints, PolyKernel, ProductKernel};
