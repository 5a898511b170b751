//! Correlation models `ρ` of the coefficient sequences and their spectral
//! densities
//!
//! ```text
//! ψ_ρ(x) = Σ_{k∈Z} ρ(|k|) e^{ikx} = 1 + 2 Σ_{k≥1} ρ(k) cos(kx),   x ∈ (0, 2π).
//! ```
//!
//! The universal zero asymptotics need `ψ_ρ` integrable, continuous on the
//! open period and bounded below by some `γ_ρ > 0`;
//! [`validate_hypotheses`] checks these numerically.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_fallible, QuadratureConfig};
use crate::TWO_PI;

/// Explicit lattice terms `|j| ≤ FGN_LATTICE_TERMS` in the fGn density; the
/// remainder is an Euler–Maclaurin tail.
const FGN_LATTICE_TERMS: usize = 64;

/// Interior grid `[GAMMA_MARGIN, 2π − GAMMA_MARGIN]` for the infimum search.
pub const GAMMA_MARGIN: f64 = 1e-3;
pub const DEFAULT_GRID_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    /// Independent coefficients, `ρ(k) = δ_{k0}`.
    Iid,
    /// `ρ(k) = r^k` with `0 < r < 1`.
    Geometric { r: f64 },
    /// Fractional Gaussian noise with Hurst index `1/2 < H < 1`.
    FractionalGaussianNoise { hurst: f64 },
    /// `ρ(k) = values[k]` for `k < values.len()`, zero beyond.
    Tabulated { values: Vec<f64> },
}

/// A validated correlation model. Construct through [`CorrelationModel::iid`],
/// [`CorrelationModel::geometric`], [`CorrelationModel::fgn`],
/// [`CorrelationModel::tabulated`] or a [`ModelConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationModel {
    kind: ModelKind,
    /// `sin(πH)Γ(2H+1)` for fGn; unused otherwise.
    c_h: f64,
}

impl CorrelationModel {
    pub fn iid() -> Self {
        Self {
            kind: ModelKind::Iid,
            c_h: 0.0,
        }
    }

    pub fn geometric(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Domain {
                param: "r",
                value: r,
                reason: "geometric ratio must lie in (0, 1)",
            });
        }
        Ok(Self {
            kind: ModelKind::Geometric { r },
            c_h: 0.0,
        })
    }

    pub fn fgn(hurst: f64) -> Result<Self> {
        if !(hurst > 0.5 && hurst < 1.0) {
            return Err(Error::Domain {
                param: "H",
                value: hurst,
                reason: "Hurst index must lie in (1/2, 1)",
            });
        }
        let c_h = (PI * hurst).sin() * statrs::function::gamma::gamma(2.0 * hurst + 1.0);
        Ok(Self {
            kind: ModelKind::FractionalGaussianNoise { hurst },
            c_h,
        })
    }

    /// `values[0]` must be 1 and every entry must satisfy `|ρ(k)| ≤ 1`.
    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        match values.first() {
            Some(&1.0) => {}
            Some(&v0) => {
                return Err(Error::Domain {
                    param: "rho(0)",
                    value: v0,
                    reason: "standardized coefficients need rho(0) = 1",
                })
            }
            None => {
                return Err(Error::Config(
                    "tabulated model needs at least rho(0)".into(),
                ))
            }
        }
        if let Some(&bad) = values.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::Domain {
                param: "rho(k)",
                value: bad,
                reason: "correlations must satisfy |rho(k)| <= 1",
            });
        }
        Ok(Self {
            kind: ModelKind::Tabulated { values },
            c_h: 0.0,
        })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn has_closed_form_psi(&self) -> bool {
        !matches!(self.kind, ModelKind::FractionalGaussianNoise { .. })
    }

    /// True when `ψ_ρ` diverges at `0` and `2π` (fGn, like `c_H |x|^{1−2H}`).
    pub fn psi_singular_at_endpoints(&self) -> bool {
        matches!(self.kind, ModelKind::FractionalGaussianNoise { .. })
    }

    /// `c_H = sin(πH)Γ(2H+1)` for fGn models.
    pub fn fgn_constant(&self) -> Option<f64> {
        match self.kind {
            ModelKind::FractionalGaussianNoise { .. } => Some(self.c_h),
            _ => None,
        }
    }

    /// Short human-readable identifier such as `fgn(H=0.75)`.
    pub fn label(&self) -> String {
        match &self.kind {
            ModelKind::Iid => "iid".to_string(),
            ModelKind::Geometric { r } => format!("geometric(r={r})"),
            ModelKind::FractionalGaussianNoise { hurst } => format!("fgn(H={hurst})"),
            ModelKind::Tabulated { values } => format!("tabulated(K={})", values.len() - 1),
        }
    }

    /// Correlation `ρ(k)`.
    pub fn rho(&self, k: u64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        match &self.kind {
            ModelKind::Iid => 0.0,
            ModelKind::Geometric { r } => r.powf(k as f64),
            ModelKind::FractionalGaussianNoise { hurst } => fgn_rho(*hurst, k),
            ModelKind::Tabulated { values } => values.get(k as usize).copied().unwrap_or(0.0),
        }
    }

    /// `ρ(0), …, ρ(len − 1)`.
    pub fn rho_table(&self, len: usize) -> Vec<f64> {
        (0..len as u64).map(|k| self.rho(k)).collect()
    }

    /// Spectral density `ψ_ρ(x)` on the open period `(0, 2π)`.
    pub fn psi(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < TWO_PI) {
            return Err(Error::Domain {
                param: "x",
                value: x,
                reason: "spectral density is evaluated on the open interval (0, 2pi)",
            });
        }
        // ψ is even and 2π-periodic, so ψ(x) = ψ(2π − x).
        let y = if x > PI { TWO_PI - x } else { x };
        Ok(match &self.kind {
            ModelKind::Iid => 1.0,
            ModelKind::Geometric { r } => (1.0 - r * r) / (1.0 - 2.0 * r * y.cos() + r * r),
            ModelKind::FractionalGaussianNoise { hurst } => fgn_psi(*hurst, self.c_h, y),
            ModelKind::Tabulated { values } => {
                let mut acc = 0.0;
                for (k, v) in values.iter().enumerate().skip(1).rev() {
                    acc += v * (k as f64 * y).cos();
                }
                1.0 + 2.0 * acc
            }
        })
    }

    /// Symmetric partial Fourier sum `1 + 2 Σ_{k=1}^{terms} ρ(k) cos(kx)`.
    pub fn psi_partial_sum(&self, x: f64, terms: usize) -> f64 {
        let mut acc = crate::summation::Compensated::default();
        for k in (1..=terms as u64).rev() {
            acc.add(self.rho(k) * (k as f64 * x).cos());
        }
        1.0 + 2.0 * acc.value()
    }
}

impl fmt::Display for CorrelationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// `½(|1+k|^{2H} + |1−k|^{2H} − 2|k|^{2H})`, as a power series in `1/k` for
/// `k ≥ 2` where the direct form cancels catastrophically:
/// `k^{2H} Σ_{j≥1} C(2H, 2j) k^{−2j}`.
fn fgn_rho(hurst: f64, k: u64) -> f64 {
    let a = 2.0 * hurst;
    if k == 1 {
        return 0.5 * (2f64.powf(a) - 2.0);
    }
    let kf = k as f64;
    let x2 = 1.0 / (kf * kf);
    let mut binom = 1.0; // C(a, m)
    let mut power = 1.0; // x^{2j}
    let mut sum = 0.0;
    for j in 1..400 {
        let m = 2 * j;
        binom *= (a - (m - 2) as f64) / (m - 1) as f64;
        binom *= (a - (m - 1) as f64) / m as f64;
        power *= x2;
        let term = binom * power;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    kf.powf(a) * sum
}

/// `2c_H(1 − cos y) Σ_{j∈Z} |2πj + y|^{−(2H+1)}` for `y ∈ (0, π]`.
fn fgn_psi(hurst: f64, c_h: f64, y: f64) -> f64 {
    let s = 2.0 * hurst + 1.0;
    let mut lattice = 0.0;
    for j in (1..=FGN_LATTICE_TERMS).rev() {
        let base = TWO_PI * j as f64;
        lattice += (base + y).powf(-s) + (base - y).powf(-s);
    }
    let start = (FGN_LATTICE_TERMS + 1) as f64;
    lattice += lattice_tail(s, start, y) + lattice_tail(s, start, -y);
    let half = 0.5 * y;
    let sin_half = half.sin();
    // j = 0 term written as 4c_H (sin(y/2)/y)² y^{1−2H} so tiny y neither
    // underflows (1 − cos y) nor overflows y^{−s}.
    let central = 4.0 * c_h * (sin_half / y).powi(2) * y.powf(2.0 - s);
    central + 4.0 * c_h * sin_half * sin_half * lattice
}

/// Euler–Maclaurin estimate of `Σ_{j ≥ start} (2πj + c)^{−s}`.
fn lattice_tail(s: f64, start: f64, c: f64) -> f64 {
    let q = TWO_PI;
    let v = q * start + c;
    let f = v.powf(-s);
    let integral = v.powf(1.0 - s) / (q * (s - 1.0));
    let d1 = -s * q * f / v;
    let d3 = -s * (s + 1.0) * (s + 2.0) * q.powi(3) * f / v.powi(3);
    let d5 = -s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * q.powi(5) * f / v.powi(5);
    integral + 0.5 * f - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0
}

/// Numerical check of the spectral hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// `‖ψ_ρ‖₁ = (1/2π)∫_0^{2π} ψ_ρ`.
    pub l1_norm: f64,
    /// `γ_ρ`, infimum of `ψ_ρ` over the validation grid after local refinement.
    pub infimum_gamma: f64,
    /// Where the infimum was found.
    pub argmin: f64,
    pub grid_points: usize,
    pub passes: bool,
}

/// Computes `‖ψ_ρ‖₁` by endpoint-graded quadrature and `γ_ρ` as the minimum
/// over a uniform grid on `[10⁻³, 2π − 10⁻³]`, refined by golden-section
/// search in the two cells around the grid minimizer.
pub fn validate_hypotheses(
    model: &CorrelationModel,
    grid_points: usize,
    quad: &QuadratureConfig,
) -> Result<HypothesisReport> {
    if grid_points < 16 {
        return Err(Error::Domain {
            param: "grid_points",
            value: grid_points as f64,
            reason: "the infimum search needs at least 16 grid points",
        });
    }
    // ψ is even about π; integrating over (0, π) keeps the singular end at 0.
    let mass = integrate_fallible(|x| model.psi(x), 0.0, PI, quad)?;
    let l1_norm = mass.value / PI;

    let lo = GAMMA_MARGIN;
    let hi = TWO_PI - GAMMA_MARGIN;
    let step = (hi - lo) / (grid_points - 1) as f64;
    let mut best = (f64::INFINITY, lo, 0usize);
    for i in 0..grid_points {
        let x = lo + step * i as f64;
        let v = model.psi(x)?;
        if v < best.0 {
            best = (v, x, i);
        }
    }
    let (mut gamma, mut argmin, i) = best;
    let a = lo + step * i.saturating_sub(1) as f64;
    let b = (lo + step * (i + 1) as f64).min(hi);
    let (x, v) = golden_section_min(|x| model.psi(x), a, b, 1e-12)?;
    if v < gamma {
        gamma = v;
        argmin = x;
    }
    Ok(HypothesisReport {
        l1_norm,
        infimum_gamma: gamma,
        argmin,
        grid_points,
        passes: gamma > 0.0 && l1_norm.is_finite(),
    })
}

fn golden_section_min<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Serializable `{kind, params}` description of a model.
///
/// | kind        | params                                  |
/// |-------------|-----------------------------------------|
/// | `iid`       | none                                    |
/// | `geometric` | `r`                                     |
/// | `fgn`       | `H`                                     |
/// | `tabulated` | `"0"`, `"1"`, … giving `ρ(0)`, `ρ(1)`, … |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ModelConfig {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn build(&self) -> Result<CorrelationModel> {
        CorrelationModel::try_from(self)
    }

    fn expect_only(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!(
                "unknown parameter `{k}` for model kind `{}`",
                self.kind
            ))),
            None => Ok(()),
        }
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.params.get(key).copied().ok_or_else(|| {
            Error::Config(format!(
                "model kind `{}` needs parameter `{key}`",
                self.kind
            ))
        })
    }
}

impl TryFrom<&ModelConfig> for CorrelationModel {
    type Error = Error;

    fn try_from(cfg: &ModelConfig) -> Result<Self> {
        match cfg.kind.to_ascii_lowercase().as_str() {
            "iid" => {
                cfg.expect_only(&[])?;
                Ok(Self::iid())
            }
            "geometric" => {
                cfg.expect_only(&["r"])?;
                Self::geometric(cfg.required("r")?)
            }
            "fgn" => {
                cfg.expect_only(&["H"])?;
                Self::fgn(cfg.required("H")?)
            }
            "tabulated" => {
                let mut values = Vec::with_capacity(cfg.params.len());
                let mut indexed: Vec<(usize, f64)> = Vec::with_capacity(cfg.params.len());
                for (k, v) in &cfg.params {
                    let idx = k.parse::<usize>().map_err(|_| {
                        Error::Config(format!("tabulated parameter `{k}` is not a lag index"))
                    })?;
                    indexed.push((idx, *v));
                }
                indexed.sort_by_key(|&(i, _)| i);
                for (expected, (idx, v)) in indexed.into_iter().enumerate() {
                    if idx != expected {
                        return Err(Error::Config(format!(
                            "tabulated model is missing lag {expected}"
                        )));
                    }
                    values.push(v);
                }
                Self::tabulated(values)
            }
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

impl From<&CorrelationModel> for ModelConfig {
    fn from(model: &CorrelationModel) -> Self {
        match &model.kind {
            ModelKind::Iid => ModelConfig::new("iid"),
            ModelKind::Geometric { r } => ModelConfig::new("geometric").with_param("r", *r),
            ModelKind::FractionalGaussianNoise { hurst } => {
                ModelConfig::new("fgn").with_param("H", *hurst)
            }
            ModelKind::Tabulated { values } => {
                let mut cfg = ModelConfig::new("tabulated");
                for (k, v) in values.iter().enumerate() {
                    cfg.params.insert(k.to_string(), *v);
                }
                cfg
            }
        }
    }
}

/// Parses `kind` or `kind:key=value,key=value`, e.g. `fgn:H=0.75`.
impl FromStr for ModelConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k.trim(), Some(r)),
            None => (s.trim(), None),
        };
        if kind.is_empty() {
            return Err(Error::Config("empty model kind".into()));
        }
        let mut cfg = ModelConfig::new(kind);
        if let Some(rest) = rest {
            for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
                let v: f64 = v.trim().parse().map_err(|_| {
                    Error::Config(format!("parameter `{k}` has non-numeric value `{v}`"))
                })?;
                cfg.params.insert(k.trim().to_string(), v);
            }
        }
        Ok(cfg)
    }
}
