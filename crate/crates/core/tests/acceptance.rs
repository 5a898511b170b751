//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! (visible with `--nocapture`) and fails if its criterion is not met.

use std::f64::consts::PI;

use trigzeros::correlation::{validate_hypotheses, CorrelationModel, DEFAULT_GRID_POINTS};
use trigzeros::covariance::{convolution_residual, MomentEvaluator};
use trigzeros::kacrice::{
    default_quadrature, edge_bound_from, expected_zeros, normalized_limit_table, LIMIT_RATIO,
};
use trigzeros::kernels::{kernel_tail_mass, l_tail_bound, Kernel, KernelFamily};
use trigzeros::quadrature::{integrate, GaussLegendre, QuadratureConfig};
use trigzeros::sampler::{
    count_zeros, monte_carlo_zero_mean, CoefficientSampler, RootCountConfig, ZeroCounter,
};
use trigzeros::TWO_PI;

const SEED: u64 = 0x5eed_2024;

fn models() -> Vec<CorrelationModel> {
    vec![
        CorrelationModel::iid(),
        CorrelationModel::geometric(0.5).unwrap(),
        CorrelationModel::fgn(0.6).unwrap(),
        CorrelationModel::fgn(0.75).unwrap(),
        CorrelationModel::fgn(0.9).unwrap(),
    ]
}

fn report(id: u32, name: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("criterion {id:>2} [{name}]: PASS");
    } else {
        println!("criterion {id:>2} [{name}]: FAIL");
        for f in failures {
            println!("    {f}");
        }
        panic!("criterion {id} failed: {}", failures.join("; "));
    }
}

#[test]
fn criterion_01_full_period_limit() {
    let quad = default_quadrature();
    let mut failures = Vec::new();
    for m in models() {
        let rows = normalized_limit_table(&m, &[100, 400, 1600], (0.0, TWO_PI), &quad).unwrap();
        let dev: Vec<f64> = rows.iter().map(|r| (r.ratio - LIMIT_RATIO).abs()).collect();
        println!(
            "    {:<16} n=100 {:.7}  n=400 {:.7}  n=1600 {:.7}",
            m.label(),
            rows[0].ratio,
            rows[1].ratio,
            rows[2].ratio
        );
        if dev[2] >= 0.05 * LIMIT_RATIO {
            failures.push(format!(
                "{}: n=1600 deviation {:.3e} not within 5%",
                m.label(),
                dev[2]
            ));
        }
        if dev[2] >= dev[0] {
            failures.push(format!(
                "{}: deviation did not shrink ({:.3e} at 100, {:.3e} at 1600)",
                m.label(),
                dev[0],
                dev[2]
            ));
        }
    }
    report(1, "E[N_n]/n -> 2/sqrt(3)", &failures);
}

#[test]
fn criterion_02_iid_exact() {
    let quad = default_quadrature();
    let m = CorrelationModel::iid();
    let mut failures = Vec::new();
    for n in [1usize, 10, 100, 200] {
        let nf = n as f64;
        let exact = 2.0 * ((nf + 1.0) * (2.0 * nf + 1.0) / 6.0).sqrt();
        let v = expected_zeros(&m, n, (0.0, TWO_PI), &quad).unwrap().value;
        if ((v - exact) / exact).abs() >= 1e-9 {
            failures.push(format!("n={n}: {v} vs {exact}"));
        }
        if n == 1 && (v - 2.0).abs() > 1e-12 {
            failures.push(format!("n=1 gives {v}, not 2"));
        }
    }
    report(2, "IID closed form", &failures);
}

#[test]
fn criterion_03_kernel_identities() {
    let quad = QuadratureConfig::default().with_rel_tol(1e-13);
    let mut failures = Vec::new();
    for n in [1usize, 2, 5, 10, 20, 64] {
        let k = KernelFamily::new(n).unwrap();
        let qn = quad.with_min_panels(4 * n);
        let mass_k = integrate(|x| k.fejer(x), 0.0, TWO_PI, &qn).unwrap().value / TWO_PI;
        let mass_l = integrate(|x| k.l_kernel(x), 0.0, TWO_PI, &qn)
            .unwrap()
            .value
            / TWO_PI;
        if (mass_k - 1.0).abs() >= 1e-9 {
            failures.push(format!("n={n}: ||K_n||_1 = {mass_k}"));
        }
        if (mass_l - 1.0).abs() >= 1e-9 {
            failures.push(format!("n={n}: ||L_n||_1 = {mass_l}"));
        }
        let negative = (0..10_000)
            .map(|i| TWO_PI * i as f64 / 10_000.0)
            .filter(|&x| k.fejer(x) < 0.0 || k.l_kernel(x) < 0.0)
            .count();
        if negative > 0 {
            failures.push(format!("n={n}: {negative} sampled points negative"));
        }
        // |K_n′| has kinks at the zeros of K_n′; a fine fixed composite rule
        // is accurate far beyond the slack in the inequality.
        let rule = GaussLegendre::new(16);
        let panels = 256 * n;
        let h = TWO_PI / panels as f64;
        let abs_deriv: f64 = (0..panels)
            .map(|i| {
                let a = i as f64 * h;
                rule.integrate(a, a + h, |x| k.fejer_derivative_periodic(x).abs())
            })
            .sum::<f64>()
            / TWO_PI;
        if abs_deriv > n as f64 {
            failures.push(format!("n={n}: ||K_n'||_1 = {abs_deriv} > n"));
        }
    }
    report(3, "kernel unit mass, positivity, Bernstein", &failures);
}

#[test]
fn criterion_04_l_tail_bound() {
    let quad = QuadratureConfig::default();
    let mut failures = Vec::new();
    for eps in [0.3, 0.5, 1.0] {
        let mut tails = Vec::new();
        for n in [5usize, 20, 80] {
            let tail = kernel_tail_mass(Kernel::L, n, eps, &quad).unwrap();
            let bound = l_tail_bound(n, eps).unwrap();
            if tail > bound {
                failures.push(format!("n={n} eps={eps}: tail {tail} > bound {bound}"));
            }
            tails.push(tail);
        }
        let ratio = tails[2] / tails[1];
        if ratio >= 0.5 {
            failures.push(format!("eps={eps}: tail(80)/tail(20) = {ratio}"));
        }
    }
    report(4, "L_n tail bound and O(1/n) decay", &failures);
}

#[test]
fn criterion_05_convolution_identities() {
    let quad = QuadratureConfig::default();
    let mut failures = Vec::new();
    let cases = [
        (CorrelationModel::iid(), vec![8usize, 32], 1e-8),
        (CorrelationModel::geometric(0.5).unwrap(), vec![8, 32], 1e-8),
        (CorrelationModel::fgn(0.75).unwrap(), vec![32], 1e-4),
    ];
    for (m, degrees, tol) in cases {
        for n in degrees {
            for t in [0.0, 0.4, 1.7, PI, 5.2] {
                let (a, b, c) = convolution_residual(&m, n, t, &quad).unwrap();
                let worst = a.max(b).max(c);
                if worst >= tol {
                    failures.push(format!("{} n={n} t={t}: residual {worst:.3e}", m.label()));
                }
            }
        }
    }
    report(5, "moments equal kernel convolutions", &failures);
}

#[test]
fn criterion_06_cross_covariance_vanishes() {
    let m = CorrelationModel::fgn(0.75).unwrap();
    let sup = |n: usize| {
        let ev = MomentEvaluator::new(&m, n).unwrap();
        let points = 20_000;
        (0..=points)
            .map(|i| 0.3 + (TWO_PI - 0.6) * i as f64 / points as f64)
            .map(|t| ev.moments(t).2.abs() / n as f64)
            .fold(0.0f64, f64::max)
    };
    let (s32, s512) = (sup(32), sup(512));
    println!("    sup|cross|/n: n=32 {s32:.4e}, n=512 {s512:.4e}");
    let mut failures = Vec::new();
    if s512 >= s32 {
        failures.push(format!("n=512 {s512} not below n=32 {s32}"));
    }
    report(6, "cross-covariance is o(n)", &failures);
}

#[test]
fn criterion_07_edge_bound() {
    let quad = default_quadrature();
    let mut failures = Vec::new();
    for m in models() {
        let rep =
            validate_hypotheses(&m, DEFAULT_GRID_POINTS, &QuadratureConfig::default()).unwrap();
        for n in [32usize, 256] {
            for eps in [0.01, 0.1, 0.3] {
                let bound = edge_bound_from(&rep, n, eps).unwrap();
                for interval in [(0.0, eps), (TWO_PI - eps, TWO_PI)] {
                    let v = expected_zeros(&m, n, interval, &quad).unwrap().value;
                    if v > bound {
                        failures.push(format!(
                            "{} n={n} {interval:?}: {v} > bound {bound}",
                            m.label()
                        ));
                    }
                }
            }
        }
    }
    report(7, "edge zero counts below n C sqrt(eps)", &failures);
}

#[test]
fn criterion_08_monte_carlo_agrees() {
    let quad = default_quadrature();
    let cfg = RootCountConfig::default();
    let mut failures = Vec::new();
    for m in models() {
        let kr = expected_zeros(&m, 64, (0.0, TWO_PI), &quad).unwrap().value;
        let mc = monte_carlo_zero_mean(&m, 64, 2000, (0.0, TWO_PI), SEED, &cfg).unwrap();
        let z = (mc.mean - kr) / mc.std_error;
        println!(
            "    {:<16} Kac-Rice {kr:.4}  MC {:.4} +- {:.4}  z={z:+.2}",
            m.label(),
            mc.mean,
            mc.std_error
        );
        if z.abs() > 3.0 {
            failures.push(format!("{}: z = {z:.2}", m.label()));
        }
    }
    let one = monte_carlo_zero_mean(
        &CorrelationModel::iid(),
        1,
        10_000,
        (0.0, TWO_PI),
        SEED,
        &cfg,
    )
    .unwrap();
    if one.mean != 2.0 || one.std_error != 0.0 {
        failures.push(format!("IID n=1: mean {} se {}", one.mean, one.std_error));
    }
    report(8, "Monte Carlo matches Kac-Rice", &failures);
}

#[test]
fn criterion_09_sampler_covariance() {
    let n = 32;
    let draws = 10_000u64;
    let mut failures = Vec::new();
    for m in [
        CorrelationModel::iid(),
        CorrelationModel::geometric(0.5).unwrap(),
        CorrelationModel::fgn(0.75).unwrap(),
    ] {
        let sampler = CoefficientSampler::new(&m, n).unwrap();
        let samples: Vec<_> = (0..draws).map(|i| sampler.draw(SEED, i)).collect();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for l in k..n {
                let target = m.rho((l - k) as u64);
                for pick in [0, 1] {
                    let prods: Vec<f64> = samples
                        .iter()
                        .map(|d| {
                            if pick == 0 {
                                d.a[k] * d.a[l]
                            } else {
                                d.b[k] * d.b[l]
                            }
                        })
                        .collect();
                    let nf = draws as f64;
                    let mean = prods.iter().sum::<f64>() / nf;
                    let var = prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (nf - 1.0);
                    let z = (mean - target) / (var / nf).sqrt();
                    worst = worst.max(z.abs());
                }
            }
        }
        println!("    {:<16} max |z| over entries {worst:.2}", m.label());
        if worst > 5.0 {
            failures.push(format!("{}: max |z| = {worst:.2}", m.label()));
        }
    }
    report(9, "sampled coefficient covariance", &failures);
}

#[test]
fn criterion_10_scale_invariance_and_cap() {
    let n = 16;
    let counter = ZeroCounter::new(n, RootCountConfig::default()).unwrap();
    let cfg = RootCountConfig::default();
    let mut failures = Vec::new();
    for m in models() {
        let sampler = CoefficientSampler::new(&m, n).unwrap();
        for i in 0..1000u64 {
            let draw = sampler.draw(SEED, i);
            let base = counter.count(&draw, (0.0, TWO_PI)).unwrap().count;
            if base > 2 * n {
                failures.push(format!("{} draw {i}: {base} zeros > 2n", m.label()));
            }
            for lambda in [0.01, 100.0] {
                let c = count_zeros(&draw.scaled(lambda), (0.0, TWO_PI), &cfg)
                    .unwrap()
                    .count;
                if c != base {
                    failures.push(format!(
                        "{} draw {i}: {base} zeros, {c} after scaling by {lambda}",
                        m.label()
                    ));
                }
            }
        }
    }
    report(10, "scale invariance and 2n cap", &failures);
}
