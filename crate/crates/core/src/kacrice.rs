//! Kac–Rice expectation of the number of zeros.
//!
//! For the non-degenerate Gaussian process `F_n`,
//!
//! ```text
//! E[N_n(K)] = (1/π) ∫_K √I_n(t) dt,
//! I_n(t)    = (E[F_n²] E[F_n′²] − E[F_n F_n′]²) / E[F_n²]².
//! ```
//!
//! In the bulk `I_n(t) = ((n+1)(2n+1)/6)(1 + o(1))`, and near the endpoints
//! `E[N_n([0, ε])] ≤ n C √ε` with `C = √(2‖ψ_ρ‖₁/(π γ_ρ))`, which together
//! give `E[N_n([0, 2π])]/n → 2/√3`.

use serde::{Deserialize, Serialize};

use crate::correlation::{
    validate_hypotheses, CorrelationModel, HypothesisReport, DEFAULT_GRID_POINTS,
};
use crate::covariance::MomentEvaluator;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_fallible, QuadratureConfig};
use crate::TWO_PI;

/// `2/√3`, the limit of `E[N_n([0, 2π])]/n`.
pub const LIMIT_RATIO: f64 = 1.154_700_538_379_251_5;

/// Negative discriminants down to this fraction of `var_f · var_fprime` are
/// rounding and get clamped to zero.
const DISCRIMINANT_CLAMP: f64 = 1e-12;

/// Default quadrature for zero counts: graded panels, modest tolerance.
pub fn default_quadrature() -> QuadratureConfig {
    QuadratureConfig {
        panels: 16,
        points_per_panel: 16,
        grading: 2.0,
        max_refinements: 8,
        rel_tol: 1e-10,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCountEstimate {
    /// Estimated `E[N_n(K)]`.
    pub value: f64,
    pub error_estimate: f64,
    pub interval: (f64, f64),
    pub n: usize,
}

impl ZeroCountEstimate {
    pub fn value_over_n(&self) -> f64 {
        self.value / self.n as f64
    }
}

/// `I_n(t)` from precomputed moment weights.
pub fn density(evaluator: &MomentEvaluator, t: f64) -> Result<f64> {
    let triple = evaluator.triple(t)?;
    let disc = triple.discriminant();
    let scale = triple.var_f * triple.var_fprime;
    let disc = if disc >= 0.0 {
        disc
    } else if disc >= -DISCRIMINANT_CLAMP * scale {
        0.0
    } else {
        return Err(Error::InternalConsistency(format!(
            "negative Kac-Rice discriminant {disc:e} at t = {t}, n = {}",
            triple.n
        )));
    };
    Ok(disc / (triple.var_f * triple.var_f))
}

/// The Kac–Rice integrand `I_n(t)`.
pub fn integrand(model: &CorrelationModel, n: usize, t: f64) -> Result<f64> {
    density(&MomentEvaluator::new(model, n)?, t)
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(lo >= 0.0 && lo < hi && hi <= TWO_PI) {
        return Err(Error::Domain {
            param: "interval",
            value: if lo >= hi {
                lo - hi
            } else {
                if lo < 0.0 {
                    lo
                } else {
                    hi
                }
            },
            reason: "need 0 <= lo < hi <= 2pi",
        });
    }
    Ok(())
}

/// Panels needed so each one spans at most half a period of the top
/// frequency `n`.
fn resolving_panels(n: usize, lo: f64, hi: f64) -> usize {
    ((n as f64) * (hi - lo) / std::f64::consts::PI)
        .ceil()
        .max(1.0) as usize
}

/// `E[N_n([lo, hi])]` by composite Gauss–Legendre quadrature of `√I_n / π`.
pub fn expected_zeros(
    model: &CorrelationModel,
    n: usize,
    interval: (f64, f64),
    quad: &QuadratureConfig,
) -> Result<ZeroCountEstimate> {
    let evaluator = MomentEvaluator::new(model, n)?;
    expected_zeros_with(&evaluator, interval, quad)
}

/// As [`expected_zeros`], reusing an evaluator for repeated intervals.
pub fn expected_zeros_with(
    evaluator: &MomentEvaluator,
    interval: (f64, f64),
    quad: &QuadratureConfig,
) -> Result<ZeroCountEstimate> {
    let (lo, hi) = interval;
    check_interval(lo, hi)?;
    let n = evaluator.degree();
    let quad = quad.with_min_panels(resolving_panels(n, lo, hi));
    let r = integrate_fallible(
        |t| Ok(density(evaluator, t)?.sqrt() / std::f64::consts::PI),
        lo,
        hi,
        &quad,
    )?;
    let cap = 2.0 * n as f64;
    if r.value > cap + r.error_estimate + 1e-9 * cap {
        return Err(Error::InternalConsistency(format!(
            "expected zero count {} exceeds the degree-{n} cap {cap}",
            r.value
        )));
    }
    Ok(ZeroCountEstimate {
        value: r.value,
        error_estimate: r.error_estimate,
        interval,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub n: usize,
    pub estimate: ZeroCountEstimate,
    /// `E[N_n]/n`
    pub ratio: f64,
}

/// `(n, E[N_n]/n)` for increasing degrees.
pub fn normalized_limit_table(
    model: &CorrelationModel,
    degrees: &[usize],
    interval: (f64, f64),
    quad: &QuadratureConfig,
) -> Result<Vec<LimitRow>> {
    if degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("degrees must be strictly increasing".into()));
    }
    degrees
        .iter()
        .map(|&n| {
            let estimate = expected_zeros(model, n, interval, quad)?;
            Ok(LimitRow {
                n,
                ratio: estimate.value_over_n(),
                estimate,
            })
        })
        .collect()
}

/// `C = √(2‖ψ_ρ‖₁/(π γ_ρ))` from a hypothesis report.
pub fn edge_constant(report: &HypothesisReport) -> Result<f64> {
    if !report.passes {
        return Err(Error::HypothesesViolated {
            model: String::new(),
            gamma: report.infimum_gamma,
            l1_norm: report.l1_norm,
        });
    }
    Ok((2.0 * report.l1_norm / (std::f64::consts::PI * report.infimum_gamma)).sqrt())
}

/// `n C √ε`, the bound on `E[N_n([0, ε])]` and on `E[N_n([2π − ε, 2π])]`.
pub fn edge_bound_from(report: &HypothesisReport, n: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Domain {
            param: "eps",
            value: eps,
            reason: "edge width must lie in (0, 0.5]",
        });
    }
    Ok(n as f64 * edge_constant(report)? * eps.sqrt())
}

/// [`edge_bound_from`] with the hypotheses validated on the default grid.
pub fn edge_bound(model: &CorrelationModel, n: usize, eps: f64) -> Result<f64> {
    let report = validate_hypotheses(model, DEFAULT_GRID_POINTS, &QuadratureConfig::default())?;
    edge_bound_from(&report, n, eps).map_err(|e| match e {
        Error::HypothesesViolated { gamma, l1_norm, .. } => Error::HypothesesViolated {
            model: model.label(),
            gamma,
            l1_norm,
        },
        other => other,
    })
}

/// Bulk count on `[ε, 2π − ε]` and the bracket it gives for the full period:
/// `bulk ≤ E[N_n([0, 2π])] ≤ bulk + 2 n C √ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodBracket {
    pub bulk: ZeroCountEstimate,
    pub edge_bound: f64,
}

impl PeriodBracket {
    pub fn lower(&self) -> f64 {
        self.bulk.value
    }

    pub fn upper(&self) -> f64 {
        self.bulk.value + 2.0 * self.edge_bound
    }
}

pub fn period_bracket(
    model: &CorrelationModel,
    n: usize,
    eps: f64,
    report: &HypothesisReport,
    quad: &QuadratureConfig,
) -> Result<PeriodBracket> {
    let edge = edge_bound_from(report, n, eps)?;
    let bulk = expected_zeros(model, n, (eps, TWO_PI - eps), quad)?;
    Ok(PeriodBracket {
        bulk,
        edge_bound: edge,
    })
}

/// `max_t |6 I_n(t)/((n+1)(2n+1)) − 1|` over the given points.
pub fn bulk_deviation(model: &CorrelationModel, n: usize, points: &[f64]) -> Result<f64> {
    let evaluator = MomentEvaluator::new(model, n)?;
    let nf = n as f64;
    let scale = (nf + 1.0) * (2.0 * nf + 1.0) / 6.0;
    points.iter().try_fold(0.0f64, |acc, &t| {
        Ok(acc.max((density(&evaluator, t)? / scale - 1.0).abs()))
    })
}
