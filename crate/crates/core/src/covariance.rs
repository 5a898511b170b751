//! Covariance structure of the normalized polynomial `F_n = f_n/√n` and its
//! derivative at a single point `t`.
//!
//! All three moments are finite trigonometric sums in `t`:
//!
//! ```text
//! E[F_n(t)²]       = 1 + 2 Σ_{r=1}^{n−1} (1 − r/n) ρ(r) cos(rt)
//! E[F_n′(t)²]      = (1/n) Σ_{k=1}^{n} k² + (2/n) Σ_{r=1}^{n−1} ρ(r) cos(rt) Σ_{k=1}^{n−r} k(r+k)
//! E[F_n(t)F_n′(t)] = −Σ_{r=1}^{n−1} (1 − r/n) ρ(r) r sin(rt)
//! ```
//!
//! They equal `K_n ∗ ψ_ρ`, `(1/α_n) L_n ∗ ψ_ρ` and `½ K_n′ ∗ ψ_ρ`. The sums
//! drive the computation; [`convolution_residual`] evaluates the convolutions
//! by quadrature to check the identities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationModel;
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::quadrature::{integrate_fallible, QuadratureConfig};
use crate::summation::Compensated;
use crate::TWO_PI;

/// Relative slack allowed in `cov_cross² ≤ var_f · var_fprime`.
pub const CAUCHY_SCHWARZ_SLACK: f64 = 1e-10;
/// Exact `sin_cos` is recomputed every this many rotation steps.
const REANCHOR_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceTriple {
    /// `E[F_n(t)²]`
    pub var_f: f64,
    /// `E[F_n′(t)²]`
    pub var_fprime: f64,
    /// `E[F_n(t) F_n′(t)]`
    pub cov_cross: f64,
    pub t: f64,
    pub n: usize,
}

impl CovarianceTriple {
    /// Enforces `var_f > 0`, `var_fprime ≥ 0` and Cauchy–Schwarz.
    pub fn checked(var_f: f64, var_fprime: f64, cov_cross: f64, t: f64, n: usize) -> Result<Self> {
        if !(var_f > 0.0) {
            return Err(Error::Degenerate { variance: var_f, t });
        }
        if var_fprime < 0.0
            || cov_cross * cov_cross > var_f * var_fprime * (1.0 + CAUCHY_SCHWARZ_SLACK)
        {
            return Err(Error::InternalConsistency(format!(
                "covariance triple at t = {t}, n = {n} violates Cauchy-Schwarz: \
                 var_f = {var_f:e}, var_fprime = {var_fprime:e}, cov_cross = {cov_cross:e}"
            )));
        }
        Ok(Self {
            var_f,
            var_fprime,
            cov_cross,
            t,
            n,
        })
    }

    /// `var_f · var_fprime − cov_cross²`.
    pub fn discriminant(&self) -> f64 {
        self.var_f * self.var_fprime - self.cov_cross * self.cov_cross
    }
}

/// Precomputed per-lag weights for one `(model, n)` pair. Evaluating the
/// three moments at a point costs `O(n)`.
#[derive(Debug, Clone)]
pub struct MomentEvaluator {
    n: usize,
    /// `(1 − r/n) ρ(r)`
    var_weights: Vec<f64>,
    /// `(2/n) ρ(r) Σ_{k=1}^{n−r} k(r+k)`
    deriv_weights: Vec<f64>,
    /// `(1 − r/n) ρ(r) r`
    cross_weights: Vec<f64>,
    diagonal_deriv: f64,
}

impl MomentEvaluator {
    pub fn new(model: &CorrelationModel, n: usize) -> Result<Self> {
        let family = KernelFamily::new(n)?;
        let nf = n as f64;
        let rho = model.rho_table(n);
        let mut var_weights = vec![0.0; n];
        let mut deriv_weights = vec![0.0; n];
        let mut cross_weights = vec![0.0; n];
        for r in 1..n {
            let rf = r as f64;
            let m = (n - r) as u128;
            let r128 = r as u128;
            // Σ_{k=1}^{m} k(r+k) = r m(m+1)/2 + m(m+1)(2m+1)/6
            let inner = r128 * m * (m + 1) / 2 + m * (m + 1) * (2 * m + 1) / 6;
            let w = 1.0 - rf / nf;
            var_weights[r] = w * rho[r];
            deriv_weights[r] = 2.0 * rho[r] * inner as f64 / nf;
            cross_weights[r] = w * rho[r] * rf;
        }
        Ok(Self {
            n,
            var_weights,
            deriv_weights,
            cross_weights,
            diagonal_deriv: family.derivative_scale(),
        })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    /// `(E[F_n²], E[F_n′²], E[F_n F_n′])` at `t`, without invariant checks.
    pub fn moments(&self, t: f64) -> (f64, f64, f64) {
        let mut var = Compensated::default();
        let mut deriv = Compensated::default();
        let mut cross = Compensated::default();
        if self.n > 1 {
            let (step_sin, step_cos) = t.sin_cos();
            let top = self.n - 1;
            let (mut s, mut c) = (top as f64 * t).sin_cos();
            // r runs downward so the smallest Fejér weights enter first.
            for r in (1..=top).rev() {
                if r != top && r % REANCHOR_EVERY == 0 {
                    (s, c) = (r as f64 * t).sin_cos();
                }
                var.add(self.var_weights[r] * c);
                deriv.add(self.deriv_weights[r] * c);
                cross.add(self.cross_weights[r] * s);
                // rotate by −t
                let (ns, nc) = (s * step_cos - c * step_sin, c * step_cos + s * step_sin);
                s = ns;
                c = nc;
            }
        }
        (
            1.0 + 2.0 * var.value(),
            self.diagonal_deriv + deriv.value(),
            -cross.value(),
        )
    }

    pub fn triple(&self, t: f64) -> Result<CovarianceTriple> {
        let (v, d, c) = self.moments(t);
        CovarianceTriple::checked(v, d, c, t, self.n)
    }
}

pub fn variance(model: &CorrelationModel, n: usize, t: f64) -> Result<f64> {
    Ok(MomentEvaluator::new(model, n)?.moments(t).0)
}

pub fn derivative_variance(model: &CorrelationModel, n: usize, t: f64) -> Result<f64> {
    Ok(MomentEvaluator::new(model, n)?.moments(t).1)
}

pub fn cross_covariance(model: &CorrelationModel, n: usize, t: f64) -> Result<f64> {
    Ok(MomentEvaluator::new(model, n)?.moments(t).2)
}

pub fn covariance_triple(model: &CorrelationModel, n: usize, t: f64) -> Result<CovarianceTriple> {
    MomentEvaluator::new(model, n)?.triple(t)
}

/// The three moments as kernel convolutions `(1/2π)∫_0^{2π} g(t − u) ψ_ρ(u) du`.
///
/// `ψ_ρ` is even about `π`, so the integral is folded onto `(0, π)` as
/// `∫ g(t − u) ψ_ρ(u) du + ∫ g(t + u) ψ_ρ(u) du`. Any singularity of `ψ_ρ` then sits at
/// the left endpoint, where the graded panels can approach it in absolute
/// terms rather than in ulps of `2π`.
pub fn convolution_moments(
    model: &CorrelationModel,
    n: usize,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<(f64, f64, f64)> {
    let family = KernelFamily::new(n)?;
    let quad = quad.with_min_panels(2 * n);
    // The two halves are integrated separately: for the odd kernel they can
    // cancel exactly, which a relative stopping rule cannot detect.
    let fold = |g: &(dyn Fn(f64) -> f64 + Sync)| -> Result<f64> {
        let minus = integrate_fallible(|u| Ok(g(t - u) * model.psi(u)?), 0.0, PI, &quad)?;
        let plus = integrate_fallible(|u| Ok(g(t + u) * model.psi(u)?), 0.0, PI, &quad)?;
        Ok(minus.value + plus.value)
    };
    let var = fold(&|x| family.fejer(x))?;
    let deriv = fold(&|x| family.l_kernel(x))?;
    let cross = fold(&|x| family.fejer_derivative_periodic(x))?;
    Ok((
        var / TWO_PI,
        family.derivative_scale() * deriv / TWO_PI,
        0.5 * cross / TWO_PI,
    ))
}

/// Absolute differences between the direct sums and their convolution forms,
/// in the order (variance, derivative variance, cross-covariance). The
/// identities are exact, so these measure quadrature error only. The model is
/// expected to satisfy the spectral hypotheses.
pub fn convolution_residual(
    model: &CorrelationModel,
    n: usize,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<(f64, f64, f64)> {
    let (v, d, c) = MomentEvaluator::new(model, n)?.moments(t);
    let (cv, cd, cc) = convolution_moments(model, n, t, quad)?;
    Ok(((v - cv).abs(), (d - cd).abs(), (c - cc).abs()))
}
