//! Monte Carlo oracle: sample correlated coefficients, evaluate the random
//! polynomial and count its zeros.
//!
//! Randomness follows a counter-based discipline. A run is keyed by a `u64`
//! seed; trial `i` draws `a` from ChaCha stream `2i` and `b` from stream
//! `2i + 1`. Trials are therefore reproducible individually and independent
//! of execution order.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationModel;
use crate::error::{Error, Result};
use crate::TWO_PI;

/// Degrees up to this size are sampled through a dense Cholesky factor.
pub const CHOLESKY_MAX_DEGREE: usize = 512;
/// Circulant eigenvalues in `[-EMBEDDING_CLIP, 0)` are clipped to zero.
pub const EMBEDDING_CLIP: f64 = 1e-8;
/// Smallest grid used for sign-change detection.
pub const MIN_GRID_POINTS: usize = 512;
const REANCHOR_EVERY: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDraw {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub seed: u64,
    /// Trial index within the seeded run.
    pub trial: u64,
    pub model_id: String,
}

impl CoefficientDraw {
    /// Builds a draw from explicit coefficients (`a.len() == b.len() == n`).
    pub fn from_coefficients(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::Config(format!(
                "coefficient sequences must be nonempty and of equal length, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        Ok(Self {
            a,
            b,
            seed: 0,
            trial: 0,
            model_id: "explicit".into(),
        })
    }

    pub fn degree(&self) -> usize {
        self.a.len()
    }

    /// Multiplies both sequences by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            a: self.a.iter().map(|x| x * factor).collect(),
            b: self.b.iter().map(|x| x * factor).collect(),
            ..self.clone()
        }
    }

    /// Exchanges the cosine and sine coefficient sequences.
    pub fn swapped(&self) -> Self {
        Self {
            a: self.b.clone(),
            b: self.a.clone(),
            ..self.clone()
        }
    }

    fn norm(&self) -> f64 {
        self.a
            .iter()
            .chain(&self.b)
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// `(f_n(t), f_n′(t))` by summation with a rotation recurrence.
    pub fn value_and_derivative(&self, t: f64) -> (f64, f64) {
        let (step_s, step_c) = t.sin_cos();
        let (mut s, mut c) = (step_s, step_c);
        let mut f = 0.0;
        let mut fp = 0.0;
        for (idx, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            let k = idx + 1;
            if k > 1 && k % REANCHOR_EVERY == 0 {
                (s, c) = (k as f64 * t).sin_cos();
            }
            let kf = k as f64;
            f += a * c + b * s;
            fp += kf * (b * c - a * s);
            let (ns, nc) = (s * step_c + c * step_s, c * step_c - s * step_s);
            s = ns;
            c = nc;
        }
        (f, fp)
    }
}

enum Factor {
    /// Row-major lower-triangular Cholesky factor of the Toeplitz matrix.
    Cholesky(Vec<f64>),
    /// `√(λ_j / m)` for the circulant embedding of size `m`.
    Circulant {
        sqrt_eigs: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    /// `a_k = √ρ Z_0 + √(1 − ρ) Z_k`.
    Constant { common: f64, own: f64 },
}

/// Reusable sampler of coefficient sequences with covariance `ρ(|k − l|)`.
pub struct CoefficientSampler {
    n: usize,
    model_id: String,
    factor: Factor,
}

impl std::fmt::Debug for CoefficientSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let method = match self.factor {
            Factor::Cholesky(_) => "cholesky",
            Factor::Circulant { .. } => "circulant",
            Factor::Constant { .. } => "constant",
        };
        f.debug_struct("CoefficientSampler")
            .field("n", &self.n)
            .field("model_id", &self.model_id)
            .field("method", &method)
            .finish()
    }
}

impl CoefficientSampler {
    /// Cholesky for `n ≤ 512`, circulant embedding above.
    pub fn new(model: &CorrelationModel, n: usize) -> Result<Self> {
        if n <= CHOLESKY_MAX_DEGREE {
            Self::cholesky(model, n)
        } else {
            Self::circulant(model, n)
        }
    }

    pub fn cholesky(model: &CorrelationModel, n: usize) -> Result<Self> {
        check_degree(n)?;
        let rho = model.rho_table(n);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = rho[i - j];
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(Error::NotPositiveDefinite {
                            model: model.label(),
                            pivot: i,
                            value: sum,
                        });
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(Self {
            n,
            model_id: model.label(),
            factor: Factor::Cholesky(l),
        })
    }

    /// Minimal circulant embedding of size `2n` built from `ρ(0), …, ρ(n)`.
    pub fn circulant(model: &CorrelationModel, n: usize) -> Result<Self> {
        check_degree(n)?;
        let m = 2 * n;
        let rho = model.rho_table(n + 1);
        let mut row: Vec<Complex64> = (0..m)
            .map(|j| Complex64::new(rho[if j <= n { j } else { m - j }], 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let min_eig = row.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if min_eig < -EMBEDDING_CLIP {
            return Err(Error::Embedding {
                size: m,
                min_eigenvalue: min_eig,
            });
        }
        let sqrt_eigs = row
            .iter()
            .map(|z| (z.re.max(0.0) / m as f64).sqrt())
            .collect();
        Ok(Self {
            n,
            model_id: model.label(),
            factor: Factor::Circulant { sqrt_eigs, fft },
        })
    }

    /// Equicorrelated coefficients, `E[a_k a_l] = ρ` for `k ≠ l`.
    ///
    /// The spectral measure of this sequence has an atom at `0`, so it is not a
    /// [`CorrelationModel`]; Kac–Rice predictions do not apply to it.
    pub fn constant_correlation(rho: f64, n: usize) -> Result<Self> {
        check_degree(n)?;
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Domain {
                param: "rho",
                value: rho,
                reason: "constant correlation must lie in [0, 1]",
            });
        }
        Ok(Self {
            n,
            model_id: format!("constant(rho={rho})"),
            factor: Factor::Constant {
                common: rho.sqrt(),
                own: (1.0 - rho).sqrt(),
            },
        })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn is_circulant(&self) -> bool {
        matches!(self.factor, Factor::Circulant { .. })
    }

    fn sequence(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = self.n;
        match &self.factor {
            Factor::Cholesky(l) => {
                let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                (0..n)
                    .map(|i| {
                        l[i * n..i * n + i + 1]
                            .iter()
                            .zip(&z)
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect()
            }
            Factor::Circulant { sqrt_eigs, fft } => {
                let mut buf: Vec<Complex64> = sqrt_eigs
                    .iter()
                    .map(|s| {
                        let re: f64 = StandardNormal.sample(rng);
                        let im: f64 = StandardNormal.sample(rng);
                        Complex64::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut buf);
                buf.iter().take(n).map(|z| z.re).collect()
            }
            Factor::Constant { common, own } => {
                let z0: f64 = StandardNormal.sample(rng);
                (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        common * z0 + own * z
                    })
                    .collect()
            }
        }
    }

    /// Draw for `trial` of the run keyed by `seed`.
    pub fn draw(&self, seed: u64, trial: u64) -> CoefficientDraw {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2 * trial);
        let a = self.sequence(&mut rng);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2 * trial + 1);
        let b = self.sequence(&mut rng);
        CoefficientDraw {
            a,
            b,
            seed,
            trial,
            model_id: self.model_id.clone(),
        }
    }
}

fn check_degree(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain {
            param: "n",
            value: 0.0,
            reason: "degree must be positive",
        });
    }
    Ok(())
}

/// One draw of `(a_k)`, `(b_k)` for the given seed (trial 0 of that run).
pub fn draw_coefficients(model: &CorrelationModel, n: usize, seed: u64) -> Result<CoefficientDraw> {
    Ok(CoefficientSampler::new(model, n)?.draw(seed, 0))
}

/// Uniform grid `2πm/M`, `m = 0..M`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|m| TWO_PI * m as f64 / points as f64)
        .collect()
}

fn is_uniform_period_grid(grid: &[f64], n: usize) -> bool {
    let m = grid.len();
    m >= 2 * n + 2
        && grid
            .iter()
            .enumerate()
            .all(|(i, &t)| (t - TWO_PI * i as f64 / m as f64).abs() <= 1e-12)
}

/// `f_n` on `M` equispaced points through one inverse FFT of `a_k − i b_k`.
/// Also returns `f_n′` when `with_derivative` is set.
fn transform_values(
    draw: &CoefficientDraw,
    fft: &dyn Fft<f64>,
    with_derivative: bool,
) -> (Vec<f64>, Option<Vec<f64>>) {
    let m = fft.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (k, (a, b)) in draw.a.iter().zip(&draw.b).enumerate() {
        buf[(k + 1) % m] += Complex64::new(*a, -*b);
    }
    let deriv = with_derivative.then(|| {
        let mut d = vec![Complex64::new(0.0, 0.0); m];
        for (k, (a, b)) in draw.a.iter().zip(&draw.b).enumerate() {
            let kf = (k + 1) as f64;
            d[(k + 1) % m] += Complex64::new(kf * b, kf * a);
        }
        fft.process(&mut d);
        d.into_iter().map(|z| z.re).collect()
    });
    fft.process(&mut buf);
    (buf.into_iter().map(|z| z.re).collect(), deriv)
}

/// `f_n(t)` at each grid point. A full-period uniform grid of at least
/// `2n + 2` points goes through the FFT; anything else is summed pointwise.
pub fn evaluate_polynomial(draw: &CoefficientDraw, grid: &[f64]) -> Vec<f64> {
    if is_uniform_period_grid(grid, draw.degree()) {
        let fft = FftPlanner::new().plan_fft_inverse(grid.len());
        transform_values(draw, fft.as_ref(), false).0
    } else {
        grid.iter()
            .map(|&t| draw.value_and_derivative(t).0)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootCountConfig {
    /// Grid points per unit degree; the grid has `max(oversampling·n, 512)` points.
    pub oversampling: usize,
    /// Bisection stops at this bracket width; roots closer than this merge.
    pub refine_tol: f64,
    /// Near-tangency threshold, relative to the Euclidean norm of the
    /// coefficient vector.
    pub tangency_margin: f64,
}

impl Default for RootCountConfig {
    fn default() -> Self {
        Self {
            oversampling: 16,
            refine_tol: 1e-10,
            tangency_margin: 1e-9,
        }
    }
}

impl RootCountConfig {
    pub fn validate(&self) -> Result<()> {
        if self.oversampling < 4 {
            return Err(Error::Domain {
                param: "oversampling",
                value: self.oversampling as f64,
                reason: "need at least 4 grid points per degree",
            });
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::Domain {
                param: "refine_tol",
                value: self.refine_tol,
                reason: "must be positive",
            });
        }
        if !(self.tangency_margin > 0.0) {
            return Err(Error::Domain {
                param: "tangency_margin",
                value: self.tangency_margin,
                reason: "must be positive",
            });
        }
        Ok(())
    }

    pub fn grid_points(&self, n: usize) -> usize {
        (self.oversampling * n).max(MIN_GRID_POINTS).max(2 * n + 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCount {
    /// Zeros located in the requested interval.
    pub count: usize,
    /// Near-tangencies seen anywhere on the period: local extrema within the
    /// tangency margin of zero that do not cross it. Not counted as zeros.
    pub near_tangencies: usize,
    /// Refined zero locations in the interval, ascending.
    pub roots: Vec<f64>,
}

/// Zero counter for a fixed degree; holds the FFT plan.
pub struct ZeroCounter {
    n: usize,
    config: RootCountConfig,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ZeroCounter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZeroCounter")
            .field("n", &self.n)
            .field("config", &self.config)
            .field("grid_points", &self.fft.len())
            .finish()
    }
}

impl ZeroCounter {
    pub fn new(n: usize, config: RootCountConfig) -> Result<Self> {
        check_degree(n)?;
        config.validate()?;
        let fft = FftPlanner::new().plan_fft_inverse(config.grid_points(n));
        Ok(Self { n, config, fft })
    }

    pub fn grid_points(&self) -> usize {
        self.fft.len()
    }

    /// All zeros of `f_n` on `[0, 2π)` plus the near-tangency count.
    pub fn roots(&self, draw: &CoefficientDraw) -> Result<(Vec<f64>, usize)> {
        if draw.degree() != self.n {
            return Err(Error::Config(format!(
                "counter built for degree {} got a degree-{} draw",
                self.n,
                draw.degree()
            )));
        }
        let m = self.fft.len();
        let (f, fp) = transform_values(draw, self.fft.as_ref(), true);
        let fp = fp.expect("derivative requested");
        let margin = self.config.tangency_margin * draw.norm();
        let tol = self.config.refine_tol;
        let h = TWO_PI / m as f64;
        let positive = |v: f64| v >= 0.0;

        let mut roots = Vec::new();
        let mut tangencies = 0;
        for i in 0..m {
            let j = (i + 1) % m;
            let (t0, t1) = (h * i as f64, h * (i + 1) as f64);
            let (f0, f1) = (f[i], f[j]);
            if positive(f0) != positive(f1) {
                roots.push(bisect_value(draw, t0, t1, positive(f0), tol));
                continue;
            }
            // No sign change: look for an extremum that dips toward zero
            // inside the cell, which may hide a pair of crossings.
            let dips = if positive(f0) {
                fp[i] < 0.0 && fp[j] >= 0.0
            } else {
                fp[i] > 0.0 && fp[j] <= 0.0
            };
            if !dips {
                continue;
            }
            let t_ext = bisect_derivative(draw, t0, t1, fp[i] >= 0.0, tol);
            let f_ext = draw.value_and_derivative(t_ext).0;
            if positive(f_ext) != positive(f0) {
                roots.push(bisect_value(draw, t0, t_ext, positive(f0), tol));
                roots.push(bisect_value(draw, t_ext, t1, positive(f_ext), tol));
            } else if f_ext.abs() < margin {
                tangencies += 1;
            }
        }
        for r in roots.iter_mut() {
            if *r >= TWO_PI {
                *r -= TWO_PI;
            }
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|b, a| (*b - *a).abs() < tol);
        if roots.len() > 1 && roots[0] + TWO_PI - roots[roots.len() - 1] < tol {
            roots.pop();
        }
        if roots.len() > 2 * self.n {
            return Err(Error::InternalConsistency(format!(
                "found {} zeros for a degree-{} trigonometric polynomial",
                roots.len(),
                self.n
            )));
        }
        Ok((roots, tangencies))
    }

    /// Zeros in `[lo, hi)`.
    pub fn count(&self, draw: &CoefficientDraw, interval: (f64, f64)) -> Result<ZeroCount> {
        let (lo, hi) = interval;
        if !(lo >= 0.0 && lo < hi && hi <= TWO_PI) {
            return Err(Error::Domain {
                param: "interval",
                value: hi - lo,
                reason: "need 0 <= lo < hi <= 2pi",
            });
        }
        let (roots, near_tangencies) = self.roots(draw)?;
        let roots: Vec<f64> = roots.into_iter().filter(|&r| r >= lo && r < hi).collect();
        Ok(ZeroCount {
            count: roots.len(),
            near_tangencies,
            roots,
        })
    }
}

/// Bisection on `f_n` given the sign at the left end.
fn bisect_value(
    draw: &CoefficientDraw,
    mut a: f64,
    mut b: f64,
    left_positive: bool,
    tol: f64,
) -> f64 {
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (draw.value_and_derivative(mid).0 >= 0.0) == left_positive {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Bisection on `f_n′` given its sign at the left end.
fn bisect_derivative(
    draw: &CoefficientDraw,
    mut a: f64,
    mut b: f64,
    left_positive: bool,
    tol: f64,
) -> f64 {
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (draw.value_and_derivative(mid).1 >= 0.0) == left_positive {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Zeros of the drawn polynomial in `[lo, hi)`.
pub fn count_zeros(
    draw: &CoefficientDraw,
    interval: (f64, f64),
    config: &RootCountConfig,
) -> Result<ZeroCount> {
    ZeroCounter::new(draw.degree(), *config)?.count(draw, interval)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub near_tangencies: usize,
}

/// Per-trial zero counts in trial order.
pub fn zero_counts(
    model: &CorrelationModel,
    n: usize,
    trials: usize,
    interval: (f64, f64),
    seed: u64,
    config: &RootCountConfig,
) -> Result<Vec<ZeroCount>> {
    let sampler = CoefficientSampler::new(model, n)?;
    let counter = ZeroCounter::new(n, *config)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|i| counter.count(&sampler.draw(seed, i), interval))
        .collect()
}

/// Mean and standard error of the zero count over `trials` seeded draws.
pub fn monte_carlo_zero_mean(
    model: &CorrelationModel,
    n: usize,
    trials: usize,
    interval: (f64, f64),
    seed: u64,
    config: &RootCountConfig,
) -> Result<MonteCarloSummary> {
    if trials < 2 {
        return Err(Error::Domain {
            param: "trials",
            value: trials as f64,
            reason: "need at least 2 trials for a standard error",
        });
    }
    let counts = zero_counts(model, n, trials, interval, seed, config)?;
    let tf = trials as f64;
    let mean = counts.iter().map(|c| c.count as f64).sum::<f64>() / tf;
    let var = counts
        .iter()
        .map(|c| (c.count as f64 - mean).powi(2))
        .sum::<f64>()
        / (tf - 1.0);
    Ok(MonteCarloSummary {
        mean,
        std_error: (var / tf).sqrt(),
        trials,
        near_tangencies: counts.iter().map(|c| c.near_tangencies).sum(),
    })
}
