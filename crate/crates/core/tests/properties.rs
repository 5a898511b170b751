use std::f64::consts::PI;

use approx::assert_relative_eq;
use trigzeros::correlation::{validate_hypotheses, CorrelationModel, DEFAULT_GRID_POINTS};
use trigzeros::covariance::{convolution_residual, variance, MomentEvaluator};
use trigzeros::kacrice::{bulk_deviation, default_quadrature, edge_bound_from, expected_zeros};
use trigzeros::kernels::KernelFamily;
use trigzeros::quadrature::{integrate, QuadratureConfig};
use trigzeros::TWO_PI;

fn models() -> Vec<CorrelationModel> {
    vec![
        CorrelationModel::iid(),
        CorrelationModel::geometric(0.5).unwrap(),
        CorrelationModel::geometric(0.9).unwrap(),
        CorrelationModel::fgn(0.6).unwrap(),
        CorrelationModel::fgn(0.75).unwrap(),
        CorrelationModel::fgn(0.9).unwrap(),
    ]
}

fn compact(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| 0.3 + (TWO_PI - 0.6) * i as f64 / (points - 1) as f64)
        .collect()
}

#[test]
fn spectral_density_is_symmetric() {
    let mut all = models();
    all.push(CorrelationModel::tabulated(vec![1.0, 0.3, -0.1, 0.05]).unwrap());
    for m in all {
        for i in 1..1000 {
            let x = PI * i as f64 / 1000.0;
            let (l, r) = (m.psi(x).unwrap(), m.psi(TWO_PI - x).unwrap());
            assert!(
                (l - r).abs() <= 1e-12 * l.abs().max(1.0),
                "{} at {x}: {l} vs {r}",
                m.label()
            );
        }
    }
}

#[test]
fn spectral_density_has_unit_mass() {
    let quad = QuadratureConfig::default();
    for m in models() {
        let rep = validate_hypotheses(&m, DEFAULT_GRID_POINTS, &quad).unwrap();
        let tol = if m.psi_singular_at_endpoints() {
            1e-4
        } else {
            1e-9
        };
        assert!(
            (rep.l1_norm - 1.0).abs() < tol,
            "{}: {}",
            m.label(),
            rep.l1_norm
        );
        assert!(rep.passes);
    }
}

#[test]
fn fgn_density_at_pi_matches_alternating_series() {
    // ψ(π) = 1 + 2 Σ (−1)^k ρ(k). Averaging two consecutive partial sums of
    // this alternating series leaves an error of order ρ(K) − ρ(K+1).
    for h in [0.6, 0.75, 0.9] {
        let m = CorrelationModel::fgn(h).unwrap();
        let terms = 1_000_000u64;
        let mut sum = 1.0;
        let mut prev = sum;
        for k in 1..=terms {
            prev = sum;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += 2.0 * sign * m.rho(k);
        }
        let brute = 0.5 * (sum + prev);
        assert_relative_eq!(m.psi(PI).unwrap(), brute, max_relative = 1e-4);
    }
}

#[test]
fn partial_sums_approach_density() {
    let m = CorrelationModel::geometric(0.5).unwrap();
    for x in [0.2, 1.0, 3.0, 5.9] {
        assert_relative_eq!(
            m.psi_partial_sum(x, 80),
            m.psi(x).unwrap(),
            max_relative = 1e-13
        );
    }
}

#[test]
fn correlations_decay_monotonically() {
    for m in [
        CorrelationModel::geometric(0.5).unwrap(),
        CorrelationModel::geometric(0.95).unwrap(),
        CorrelationModel::fgn(0.55).unwrap(),
        CorrelationModel::fgn(0.75).unwrap(),
        CorrelationModel::fgn(0.95).unwrap(),
    ] {
        let mut last = m.rho(1).abs();
        for k in 2..=100_000u64 {
            let r = m.rho(k).abs();
            assert!(r <= last, "{} not monotone at k={k}", m.label());
            last = r;
        }
        assert!(
            last < 0.5 * m.rho(1).abs(),
            "{}: rho(1e5) = {last}",
            m.label()
        );
    }
}

#[test]
fn fejer_derivative_has_zero_mean() {
    let quad = QuadratureConfig::default();
    for n in [2usize, 3, 17, 100] {
        let k = KernelFamily::new(n).unwrap();
        let r = integrate(
            |x| k.fejer_derivative_periodic(x),
            0.0,
            TWO_PI,
            &quad.with_min_panels(2 * n),
        )
        .unwrap();
        assert!(r.value.abs() < 1e-10 * n as f64, "n={n}: {}", r.value);
    }
}

#[test]
fn variance_is_bounded_below_by_gamma() {
    let quad = QuadratureConfig::default();
    for m in models() {
        let gamma = validate_hypotheses(&m, DEFAULT_GRID_POINTS, &quad)
            .unwrap()
            .infimum_gamma;
        for n in [1usize, 4, 31, 256] {
            for i in 0..200 {
                let t = TWO_PI * i as f64 / 200.0;
                let v = variance(&m, n, t).unwrap();
                assert!(
                    v >= gamma - 1e-6,
                    "{} n={n} t={t}: {v} < {gamma}",
                    m.label()
                );
            }
        }
    }
}

#[test]
fn variance_converges_uniformly_on_compact() {
    let pts = compact(400);
    for m in models().into_iter().skip(1) {
        let sup = |n: usize| {
            let ev = MomentEvaluator::new(&m, n).unwrap();
            pts.iter()
                .map(|&t| (ev.moments(t).0 - m.psi(t).unwrap()).abs())
                .fold(0.0f64, f64::max)
        };
        let (s32, s512) = (sup(32), sup(512));
        assert!(s512 < s32, "{}: {s32} -> {s512}", m.label());
    }
}

#[test]
fn cross_covariance_is_small_relative_to_n() {
    let pts = compact(4000);
    for m in models().into_iter().skip(1) {
        let sup = |n: usize| {
            let ev = MomentEvaluator::new(&m, n).unwrap();
            pts.iter()
                .map(|&t| ev.moments(t).2.abs() / n as f64)
                .fold(0.0f64, f64::max)
        };
        assert!(sup(512) < sup(32), "{}", m.label());
    }
}

#[test]
fn derivative_variance_scale() {
    let pts = compact(200);
    let quad = QuadratureConfig::default();
    for m in models() {
        let gamma = validate_hypotheses(&m, DEFAULT_GRID_POINTS, &quad)
            .unwrap()
            .infimum_gamma;
        let sup_psi = pts
            .iter()
            .map(|&t| m.psi(t).unwrap())
            .fold(0.0f64, f64::max);
        for n in [128usize, 700] {
            let ev = MomentEvaluator::new(&m, n).unwrap();
            let nf = n as f64;
            let scale = (nf + 1.0) * (2.0 * nf + 1.0) / 6.0;
            for &t in &pts {
                let r = ev.moments(t).1 / scale;
                assert!(
                    r >= 0.5 * gamma && r <= 2.0 * sup_psi,
                    "{} n={n} t={t}: {r}",
                    m.label()
                );
            }
        }
    }
}

#[test]
fn convolution_residual_shrinks_with_refinement() {
    let m = CorrelationModel::fgn(0.75).unwrap();
    let residual = |tol: f64| {
        let (a, b, c) =
            convolution_residual(&m, 16, 1.3, &QuadratureConfig::default().with_rel_tol(tol))
                .unwrap();
        a.max(b).max(c)
    };
    let levels = [residual(1e-3), residual(1e-6), residual(1e-10)];
    assert!(
        levels[1] <= levels[0] && levels[2] <= levels[1],
        "{levels:?}"
    );
    assert!(levels[2] < 1e-6, "{levels:?}");
}

#[test]
fn zero_counts_are_additive() {
    let quad = default_quadrature();
    for m in models() {
        let ev = MomentEvaluator::new(&m, 40).unwrap();
        let part = |lo, hi| trigzeros::kacrice::expected_zeros_with(&ev, (lo, hi), &quad).unwrap();
        let (x, y, whole) = (part(0.0, 2.0), part(2.0, 5.0), part(0.0, 5.0));
        let slack = x.error_estimate + y.error_estimate + whole.error_estimate + 1e-9 * whole.value;
        assert!(
            (x.value + y.value - whole.value).abs() <= slack,
            "{}",
            m.label()
        );
    }
}

#[test]
fn zero_counts_respect_degree_cap() {
    let quad = default_quadrature();
    for m in models() {
        for n in [1usize, 5, 50] {
            for interval in [(0.0, TWO_PI), (0.0, 0.5), (1.0, 4.0)] {
                let e = expected_zeros(&m, n, interval, &quad).unwrap();
                let cap = 2.0 * n as f64;
                assert!(
                    e.value <= cap + e.error_estimate + 1e-12 * cap,
                    "{} n={n}",
                    m.label()
                );
            }
        }
    }
}

#[test]
fn iid_counts_are_exact_up_to_200() {
    let quad = default_quadrature();
    for n in (1..=200).step_by(13) {
        let nf = n as f64;
        let exact = 2.0 * ((nf + 1.0) * (2.0 * nf + 1.0) / 6.0).sqrt();
        let v = expected_zeros(&CorrelationModel::iid(), n, (0.0, TWO_PI), &quad)
            .unwrap()
            .value;
        assert!((v - exact).abs() < 1e-9, "n={n}: {v} vs {exact}");
    }
}

#[test]
fn bulk_density_converges() {
    let pts = compact(20);
    for m in models() {
        let (d64, d512) = (
            bulk_deviation(&m, 64, &pts).unwrap(),
            bulk_deviation(&m, 512, &pts).unwrap(),
        );
        if m.label() == "iid" {
            assert!(d64 < 1e-12 && d512 < 1e-12);
        } else {
            assert!(d512 < d64, "{}: {d64} -> {d512}", m.label());
        }
    }
}

#[test]
fn edge_counts_stay_below_bound() {
    let quad = default_quadrature();
    for m in models() {
        let rep =
            validate_hypotheses(&m, DEFAULT_GRID_POINTS, &QuadratureConfig::default()).unwrap();
        for n in [32usize, 128, 512] {
            let ev = MomentEvaluator::new(&m, n).unwrap();
            for eps in [0.01, 0.05, 0.1, 0.3] {
                let bound = edge_bound_from(&rep, n, eps).unwrap();
                for interval in [(0.0, eps), (TWO_PI - eps, TWO_PI)] {
                    let v = trigzeros::kacrice::expected_zeros_with(&ev, interval, &quad)
                        .unwrap()
                        .value;
                    assert!(v <= bound, "{} n={n} eps={eps}: {v} > {bound}", m.label());
                }
            }
        }
    }
}

#[test]
fn bulk_count_matches_density_of_zeros() {
    let m = CorrelationModel::fgn(0.75).unwrap();
    let n = 2000;
    let v = expected_zeros(&m, n, (0.3, TWO_PI - 0.3), &default_quadrature())
        .unwrap()
        .value;
    let target = n as f64 * (TWO_PI - 0.6) / (3f64.sqrt() * PI);
    assert!(((v - target) / target).abs() < 0.02, "{v} vs {target}");
}
