//! The Fejér kernel `K_n`, its derivative `K_n′` and the second-moment kernel
//! `L_n`.
//!
//! With the norm `‖g‖₁ = (1/2π)∫ over one period`, both `K_n` and `L_n` are
//! non-negative with unit mass and concentrate at `x ≡ 0` as `n` grows. The
//! variance of the normalized polynomial and of its derivative are their
//! convolutions with the spectral density; see [`crate::covariance`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureConfig};
use crate::TWO_PI;

/// Below this `|sin(x/2)|` the Fejér ratio switches to its Taylor expansion.
const FEJER_SERIES_THRESHOLD: f64 = 1e-8;
/// Below this `|sin(x/2)|` `K_n′` is summed from its Fourier series.
const DERIVATIVE_SERIES_THRESHOLD: f64 = 1e-3;
/// Below this `n|sin(x/2)|` `L_n` is summed directly.
const L_SERIES_THRESHOLD: f64 = 0.5;

/// Reduces `x` modulo `2π` into `(−π, π]`.
pub(crate) fn reduce_periodic(x: f64) -> f64 {
    let mut y = x.rem_euclid(TWO_PI);
    if y > PI {
        y -= TWO_PI;
    }
    y
}

/// Kernels of a fixed degree `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelFamily {
    degree: usize,
    alpha_n: f64,
}

impl KernelFamily {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Domain {
                param: "n",
                value: 0.0,
                reason: "degree must be positive",
            });
        }
        let n = degree as f64;
        Ok(Self {
            degree,
            alpha_n: 6.0 / ((n + 1.0) * (2.0 * n + 1.0)),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `α_n = 6/((n+1)(2n+1))`.
    pub fn alpha_n(&self) -> f64 {
        self.alpha_n
    }

    /// `α_n` as the exact fraction `(6, (n+1)(2n+1))`.
    pub fn alpha_n_rational(&self) -> (u128, u128) {
        let n = self.degree as u128;
        (6, (n + 1) * (2 * n + 1))
    }

    /// `(1/n)(sin(nx/2)/sin(x/2))²`, continuously extended by `n` at `x ≡ 0`.
    pub fn fejer(&self, x: f64) -> f64 {
        let x = reduce_periodic(x);
        let n = self.degree as f64;
        let s = (0.5 * x).sin();
        if s.abs() < FEJER_SERIES_THRESHOLD {
            return n * (1.0 - (n * n - 1.0) * x * x / 12.0);
        }
        let ratio = (0.5 * n * x).sin() / s;
        ratio * ratio / n
    }

    /// `K_n′(x)` on the open period; errors at `0` and `2π`.
    pub fn fejer_derivative(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < TWO_PI) {
            return Err(Error::Domain {
                param: "x",
                value: x,
                reason: "closed-form Fejer derivative is singular at 0 and 2pi",
            });
        }
        Ok(self.fejer_derivative_periodic(x))
    }

    /// `K_n′` on the whole line, with the continuous value `0` at `x ≡ 0`.
    pub fn fejer_derivative_periodic(&self, x: f64) -> f64 {
        let x = reduce_periodic(x);
        let n = self.degree as f64;
        let half = 0.5 * x;
        let s = half.sin();
        if s.abs() < DERIVATIVE_SERIES_THRESHOLD {
            // K_n′(x) = −2 Σ_{r=1}^{n} (1 − r/n) r sin(rx)
            let mut acc = 0.0;
            for r in (1..self.degree).rev() {
                let rf = r as f64;
                acc += (1.0 - rf / n) * rf * (rf * x).sin();
            }
            return -2.0 * acc;
        }
        let c = half.cos();
        let (sn, cn) = (0.5 * n * x).sin_cos();
        sn * cn / (s * s) - c * sn * sn / (n * s * s * s)
    }

    /// `(α_n/n)|Σ_{k=1}^{n} k e^{ikx}|²`.
    pub fn l_kernel(&self, x: f64) -> f64 {
        let x = reduce_periodic(x);
        let n = self.degree as f64;
        let s = (0.5 * x).sin();
        let sum = if n * s.abs() < L_SERIES_THRESHOLD {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in (1..=self.degree).rev() {
                acc += (k as f64) * Complex64::cis(k as f64 * x);
            }
            acc
        } else {
            // Σ_{k=0}^{n} k z^k = z(1 − z^{n+1})/(1 − z)² − (n+1) z^{n+1}/(1 − z)
            let z = Complex64::cis(x);
            let zn1 = Complex64::cis((n + 1.0) * x);
            let w = Complex64::new(1.0, 0.0) - z;
            z * (Complex64::new(1.0, 0.0) - zn1) / (w * w) - (n + 1.0) * zn1 / w
        };
        self.alpha_n / n * sum.norm_sqr()
    }

    /// `L_n(0) = 3n(n+1)/(2(2n+1))`.
    pub fn l_kernel_peak(&self) -> f64 {
        let n = self.degree as f64;
        3.0 * n * (n + 1.0) / (2.0 * (2.0 * n + 1.0))
    }

    /// `(n+1)(2n+1)/6 = 1/α_n`, the scale of `E[F_n′(t)²]`.
    pub fn derivative_scale(&self) -> f64 {
        1.0 / self.alpha_n
    }
}

pub fn fejer(n: usize, x: f64) -> Result<f64> {
    Ok(KernelFamily::new(n)?.fejer(x))
}

pub fn fejer_derivative(n: usize, x: f64) -> Result<f64> {
    KernelFamily::new(n)?.fejer_derivative(x)
}

pub fn l_kernel(n: usize, x: f64) -> Result<f64> {
    Ok(KernelFamily::new(n)?.l_kernel(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    K,
    L,
}

/// `(1/2π)∫_ε^{2π−ε}` of the chosen kernel.
pub fn kernel_tail_mass(
    kernel: Kernel,
    n: usize,
    eps: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let family = KernelFamily::new(n)?;
    if !(eps > 0.0 && eps < PI) {
        return Err(Error::Domain {
            param: "eps",
            value: eps,
            reason: "must lie in (0, pi)",
        });
    }
    let quad = quad.with_min_panels(n);
    let r = match kernel {
        Kernel::K => integrate(|x| family.fejer(x), eps, TWO_PI - eps, &quad)?,
        Kernel::L => integrate(|x| family.l_kernel(x), eps, TWO_PI - eps, &quad)?,
    };
    Ok(r.value / TWO_PI)
}

/// Analytic bound `(1/2π) α_n ((n+1)/sin(ε/2) + 2/sin²(ε/2))` on the `L_n`
/// tail mass.
pub fn l_tail_bound(n: usize, eps: f64) -> Result<f64> {
    let family = KernelFamily::new(n)?;
    let s = (0.5 * eps).sin();
    Ok(family.alpha_n * ((n as f64 + 1.0) / s + 2.0 / (s * s)) / TWO_PI)
}
