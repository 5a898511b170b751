//! Expected number of real zeros of random trigonometric polynomials
//!
//! ```text
//! f_n(t) = Σ_{k=1}^{n} a_k cos(kt) + b_k sin(kt)
//! ```
//!
//! whose coefficient sequences `(a_k)` and `(b_k)` are independent stationary
//! Gaussian sequences sharing a correlation function `ρ`.
//!
//! The crate has two independent routes to `E[N_n(K)]`, the mean number of
//! zeros in a set `K`:
//!
//! * [`kacrice`] integrates the Kac–Rice density built from the exact
//!   covariance structure in [`covariance`];
//! * [`sampler`] draws coefficients, evaluates the polynomial and counts its
//!   sign changes.
//!
//! [`correlation`] holds the correlation models and their spectral densities,
//! [`kernels`] the Fejér-type kernels through which the covariances are
//! convolutions of the spectral density, and [`quadrature`] the composite
//! Gauss–Legendre integrator shared by everything that integrates.

// `!(x > 0.0)` is used throughout so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod covariance;
pub mod error;
pub mod kacrice;
pub mod kernels;
pub mod quadrature;
pub mod sampler;
mod summation;

pub use correlation::{
    validate_hypotheses, CorrelationModel, HypothesisReport, ModelConfig, ModelKind,
};
pub use covariance::{covariance_triple, CovarianceTriple, MomentEvaluator};
pub use error::{Error, Result};
pub use kacrice::{expected_zeros, normalized_limit_table, ZeroCountEstimate, LIMIT_RATIO};
pub use kernels::KernelFamily;
pub use quadrature::{QuadratureConfig, QuadratureResult};
pub use sampler::{CoefficientDraw, RootCountConfig, ZeroCount};

/// One full period, `2π`.
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
