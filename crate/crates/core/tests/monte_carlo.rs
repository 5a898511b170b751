use trigzeros::correlation::CorrelationModel;
use trigzeros::kacrice::{default_quadrature, expected_zeros};
use trigzeros::sampler::{monte_carlo_zero_mean, CoefficientSampler, RootCountConfig, ZeroCounter};
use trigzeros::TWO_PI;

const SEED: u64 = 0x0dd_ba11;

fn models() -> Vec<CorrelationModel> {
    vec![
        CorrelationModel::iid(),
        CorrelationModel::geometric(0.5).unwrap(),
        CorrelationModel::fgn(0.6).unwrap(),
        CorrelationModel::fgn(0.75).unwrap(),
        CorrelationModel::fgn(0.9).unwrap(),
    ]
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn monte_carlo_matches_kac_rice_at_other_degrees() {
    let quad = default_quadrature();
    let cfg = RootCountConfig::default();
    for n in [16usize, 128] {
        for m in models() {
            let kr = expected_zeros(&m, n, (0.0, TWO_PI), &quad).unwrap().value;
            let mc = monte_carlo_zero_mean(&m, n, 2000, (0.0, TWO_PI), SEED, &cfg).unwrap();
            let z = (mc.mean - kr) / mc.std_error;
            assert!(
                z.abs() <= 3.0,
                "{} n={n}: MC {} +- {} vs {kr}",
                m.label(),
                mc.mean,
                mc.std_error
            );
        }
    }
}

#[test]
fn monte_carlo_on_sub_interval() {
    let m = CorrelationModel::fgn(0.75).unwrap();
    let interval = (0.5, 2.5);
    let kr = expected_zeros(&m, 48, interval, &default_quadrature())
        .unwrap()
        .value;
    let mc =
        monte_carlo_zero_mean(&m, 48, 3000, interval, SEED, &RootCountConfig::default()).unwrap();
    assert!(
        (mc.mean - kr).abs() <= 3.0 * mc.std_error,
        "{} vs {kr}",
        mc.mean
    );
}

#[test]
fn swapping_sequences_preserves_mean_count() {
    let n = 16;
    let counter = ZeroCounter::new(n, RootCountConfig::default()).unwrap();
    for m in [
        CorrelationModel::geometric(0.5).unwrap(),
        CorrelationModel::fgn(0.75).unwrap(),
    ] {
        let sampler = CoefficientSampler::new(&m, n).unwrap();
        let diffs: Vec<f64> = (0..2000)
            .map(|i| {
                let d = sampler.draw(SEED, i);
                let a = counter.count(&d, (0.0, TWO_PI)).unwrap().count as f64;
                let b = counter.count(&d.swapped(), (0.0, TWO_PI)).unwrap().count as f64;
                a - b
            })
            .collect();
        let (mean, se) = mean_and_se(&diffs);
        assert!(
            mean.abs() <= 2.0 * se,
            "{}: paired difference {mean} +- {se}",
            m.label()
        );
    }
}

#[test]
fn counts_agree_across_grid_resolutions() {
    let n = 16;
    let coarse = ZeroCounter::new(
        n,
        RootCountConfig {
            oversampling: 8,
            ..Default::default()
        },
    )
    .unwrap();
    let fine = ZeroCounter::new(
        n,
        RootCountConfig {
            oversampling: 32,
            ..Default::default()
        },
    )
    .unwrap();
    for m in models() {
        let sampler = CoefficientSampler::new(&m, n).unwrap();
        let trials = 1000;
        let agree = (0..trials)
            .filter(|&i| {
                let d = sampler.draw(SEED, i);
                coarse.count(&d, (0.0, TWO_PI)).unwrap().count
                    == fine.count(&d, (0.0, TWO_PI)).unwrap().count
            })
            .count();
        assert!(
            agree as f64 >= 0.99 * trials as f64,
            "{}: {agree}/{trials}",
            m.label()
        );
    }
}

#[test]
fn circulant_embedding_reproduces_covariance() {
    let n = 600;
    let m = CorrelationModel::fgn(0.75).unwrap();
    let sampler = CoefficientSampler::new(&m, n).unwrap();
    assert!(sampler.is_circulant());
    let draws: Vec<_> = (0..5000).map(|i| sampler.draw(SEED, i)).collect();
    for (k, l) in [
        (0usize, 0usize),
        (0, 1),
        (10, 13),
        (100, 150),
        (0, 599),
        (598, 599),
    ] {
        for pick_b in [false, true] {
            let prods: Vec<f64> = draws
                .iter()
                .map(|d| {
                    if pick_b {
                        d.b[k] * d.b[l]
                    } else {
                        d.a[k] * d.a[l]
                    }
                })
                .collect();
            let (mean, se) = mean_and_se(&prods);
            let target = m.rho((l - k) as u64);
            assert!(
                (mean - target).abs() <= 5.0 * se,
                "({k},{l}): {mean} vs {target}"
            );
        }
    }
}

#[test]
fn near_tangencies_are_rare() {
    let cfg = RootCountConfig::default();
    for m in models() {
        let mc = monte_carlo_zero_mean(&m, 32, 500, (0.0, TWO_PI), SEED, &cfg).unwrap();
        assert!(
            mc.near_tangencies <= 5,
            "{}: {}",
            m.label(),
            mc.near_tangencies
        );
    }
}
