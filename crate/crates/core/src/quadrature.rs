//! Composite Gauss–Legendre quadrature with geometric endpoint grading.
//!
//! The interval is cut into `panels · 2^level` equal panels. When `grading > 1`
//! the two end panels are further split into sub-panels whose widths shrink
//! geometrically (ratio `grading`) toward the interval endpoints, which makes
//! integrable endpoint singularities such as `x^{-0.8}` converge. Each level
//! doubles the uniform panel count; the error estimate is the difference
//! between two successive levels.
//!
//! Panels are evaluated in parallel and reduced in panel order, so results are
//! bit-identical regardless of thread scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::Compensated;

/// Sub-panels stop once they are narrower than this fraction of the interval.
const GRADED_FLOOR: f64 = 1e-60;
const MAX_GRADED_SUBPANELS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Uniform panels at the coarsest level.
    pub panels: usize,
    /// Gauss–Legendre order on each panel.
    pub points_per_panel: usize,
    /// Geometric refinement ratio toward the endpoints; 1 disables grading.
    pub grading: f64,
    /// How many times the panel count may be doubled.
    pub max_refinements: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panels: 32,
            points_per_panel: 16,
            grading: 2.0,
            max_refinements: 8,
            rel_tol: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.panels == 0 {
            return Err(Error::Domain {
                param: "panels",
                value: 0.0,
                reason: "must be positive",
            });
        }
        if self.points_per_panel == 0 || self.points_per_panel > 256 {
            return Err(Error::Domain {
                param: "points_per_panel",
                value: self.points_per_panel as f64,
                reason: "must lie in 1..=256",
            });
        }
        if !(self.grading >= 1.0 && self.grading.is_finite()) {
            return Err(Error::Domain {
                param: "grading",
                value: self.grading,
                reason: "must be a finite ratio >= 1",
            });
        }
        if self.max_refinements == 0 {
            return Err(Error::Domain {
                param: "max_refinements",
                value: 0.0,
                reason: "must be positive",
            });
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Domain {
                param: "rel_tol",
                value: self.rel_tol,
                reason: "must lie in (0, 1)",
            });
        }
        Ok(())
    }

    /// Raises the coarsest panel count to at least `panels`.
    pub fn with_min_panels(mut self, panels: usize) -> Self {
        self.panels = self.panels.max(panels);
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    /// Absolute difference between the last two refinement levels.
    pub error_estimate: f64,
    /// Total integrand evaluations over all levels.
    pub evaluations: usize,
    /// Number of doublings performed beyond the coarsest level.
    pub refinements: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order > 0, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Newton iteration from the Tricomi initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[order - 1 - i] = x;
            weights[order - 1 - i] = w;
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Fixed-order rule on `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Compensated::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Panel breakpoints for one refinement level.
fn breakpoints(lo: f64, hi: f64, uniform: usize, grading: f64) -> Vec<f64> {
    let len = hi - lo;
    let h = len / uniform as f64;
    let mut left = Vec::new();
    let mut right = Vec::new();
    if grading > 1.0 {
        // Below a few ulps of the endpoint the nodes would collapse onto it.
        let floor_lo = (GRADED_FLOOR * len).max(64.0 * ulp(lo));
        let floor_hi = (GRADED_FLOOR * len).max(64.0 * ulp(hi));
        let mut w = h;
        while left.len() < MAX_GRADED_SUBPANELS {
            w /= grading;
            let (more_lo, more_hi) = (w > floor_lo, w > floor_hi);
            if more_lo {
                left.push(lo + w);
            }
            if more_hi {
                right.push(hi - w);
            }
            if !more_lo && !more_hi {
                break;
            }
        }
    }
    let mut pts = Vec::with_capacity(uniform + 1 + 2 * left.len());
    pts.push(lo);
    pts.extend(left.iter().rev());
    for i in 1..uniform {
        pts.push(lo + len * (i as f64 / uniform as f64));
    }
    pts.extend(right.iter());
    pts.push(hi);
    pts
}

fn ulp(x: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else {
        f64::from_bits(a.to_bits() + 1) - a
    }
}

struct LevelSum {
    value: f64,
    abs_value: f64,
    evaluations: usize,
}

fn integrate_level<F>(f: &F, rule: &GaussLegendre, pts: &[f64]) -> Result<LevelSum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let per_panel: Vec<Result<(f64, f64)>> = pts
        .par_windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut acc = Compensated::default();
            let mut abs = 0.0;
            for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
                let y = f(mid + half * x)?;
                acc.add(wt * y);
                abs += wt * y.abs();
            }
            Ok((half * acc.value(), half * abs))
        })
        .collect();
    let mut acc = Compensated::default();
    let mut abs = 0.0;
    for panel in per_panel {
        let (v, a) = panel?;
        acc.add(v);
        abs += a;
    }
    Ok(LevelSum {
        value: acc.value(),
        abs_value: abs,
        evaluations: (pts.len() - 1) * rule.nodes.len(),
    })
}

/// Integrates a fallible integrand over `[lo, hi]`.
///
/// Stops as soon as two successive levels agree to `rel_tol` (relative to the
/// integral, or to the integral of `|f|` when the integral itself is tiny).
/// Running out of refinements yields [`Error::NonConvergence`] carrying the
/// finest estimate.
pub fn integrate_fallible<F>(
    f: F,
    lo: f64,
    hi: f64,
    config: &QuadratureConfig,
) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    config.validate()?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain {
            param: "interval",
            value: hi - lo,
            reason: "integration interval must be finite and nonempty",
        });
    }
    let rule = GaussLegendre::new(config.points_per_panel);
    let mut uniform = config.panels;
    let mut prev = integrate_level(&f, &rule, &breakpoints(lo, hi, uniform, config.grading))?;
    let mut evaluations = prev.evaluations;
    let mut error_estimate = f64::INFINITY;
    for level in 1..=config.max_refinements {
        uniform *= 2;
        let cur = integrate_level(&f, &rule, &breakpoints(lo, hi, uniform, config.grading))?;
        evaluations += cur.evaluations;
        error_estimate = (cur.value - prev.value).abs();
        let converged = error_estimate <= config.rel_tol * cur.value.abs()
            || error_estimate <= 64.0 * f64::EPSILON * cur.abs_value;
        if converged {
            return Ok(QuadratureResult {
                value: cur.value,
                error_estimate,
                evaluations,
                refinements: level,
            });
        }
        prev = cur;
    }
    Err(Error::NonConvergence {
        what: "composite Gauss-Legendre quadrature",
        estimate: prev.value,
        error_bound: error_estimate,
    })
}

/// Infallible-integrand convenience wrapper around [`integrate_fallible`].
pub fn integrate<F>(f: F, lo: f64, hi: f64, config: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    integrate_fallible(|x| Ok(f(x)), lo, hi, config)
}
