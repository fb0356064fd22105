mod common;

use common::{pmml, reference_models};
use mml::gof::{ks_critical_1pct, ks_statistic, ks_two_sample};
use mml::ml_special::gamma::gamma;
use mml::phase_type::{make_coxian, make_erlang};
use mml::sampling::{
    mixing_cdf, mixing_quantile, sample_ml_scalar, sample_mml, sample_pmml, sample_pmml_n,
    sample_positive_stable, RandomStream,
};
use mml::MmlDist;
use proptest::prelude::*;

const N: usize = 100_000;

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn stable_fractional_moment() {
    let mut rng = RandomStream::new(101);
    let xs: Vec<f64> = (0..1_000_000)
        .map(|_| sample_positive_stable(0.5, &mut rng).powf(0.25))
        .collect();
    let (m, se) = mean_se(&xs);
    let exact = gamma(0.5) / gamma(0.75);
    assert!((m - exact).abs() <= 3.0 * se, "{m} vs {exact} (se {se})");
}

#[test]
fn stable_laplace_transform() {
    for (seed, alpha) in [(1u64, 0.3), (2, 0.7), (3, 0.9)] {
        let mut rng = RandomStream::new(seed);
        let s: Vec<f64> = (0..N).map(|_| sample_positive_stable(alpha, &mut rng)).collect();
        for u in [0.5f64, 1.0, 2.0] {
            let e: Vec<f64> = s.iter().map(|x| (-u * x).exp()).collect();
            let (m, se) = mean_se(&e);
            let exact = (-u.powf(alpha)).exp();
            assert!((m - exact).abs() <= 3.0 * se, "alpha {alpha} u {u}: {m} vs {exact}");
        }
    }
}

#[test]
fn alpha_one_samples_phase_type() {
    let g = make_coxian(&[0.5, 0.5, 0.0], &[1.0, 2.0, 3.0]).unwrap();
    let d = MmlDist::new(1.0, g.clone()).unwrap();
    let mut rng = RandomStream::new(9);
    let xs: Vec<f64> = (0..N).map(|_| sample_mml(&d, &mut rng)).collect();
    assert!(ks_statistic(&xs, |x| g.cdf(x)) < ks_critical_1pct(N));
}

#[test]
fn product_representation_matches_cdf() {
    for (i, (name, d)) in reference_models().into_iter().enumerate().take(3) {
        let mut rng = RandomStream::new(40 + i as u64);
        let xs: Vec<f64> = (0..N).map(|_| sample_mml(&d, &mut rng)).collect();
        let ks = ks_statistic(&xs, |x| d.cdf(x).unwrap());
        assert!(ks < ks_critical_1pct(N), "{name}: {ks}");
    }
}

#[test]
fn fractional_moment_by_monte_carlo() {
    let d = MmlDist::new(0.7, make_erlang(4, 2.0).unwrap()).unwrap();
    let rho = 0.35;
    let mut rng = RandomStream::new(77);
    let xs: Vec<f64> = (0..N).map(|_| sample_mml(&d, &mut rng).powf(rho)).collect();
    let (m, se) = mean_se(&xs);
    let exact = d.frac_moment(rho).unwrap();
    assert!((m - exact).abs() <= 3.0 * se, "{m} vs {exact} (se {se})");
}

#[test]
fn power_transform_samples() {
    let d = MmlDist::new(0.5, make_erlang(1, 1.0).unwrap()).unwrap();
    let p = pmml(&d, 2.0);
    let mut rng = RandomStream::new(8);
    let xs = sample_pmml_n(&p, N, &mut rng);
    assert!(ks_statistic(&xs, |x| p.cdf(x).unwrap()) < ks_critical_1pct(N));
    // ν = 1 consumes the stream exactly as the MML sampler does
    let p1 = pmml(&d, 1.0);
    let (mut a, mut b) = (RandomStream::new(3), RandomStream::new(3));
    for _ in 0..100 {
        assert_eq!(sample_pmml(&p1, &mut a), sample_mml(&d, &mut b));
    }
}

#[test]
fn kozubowski_sampler_matches_pillai_cdf() {
    let (alpha, delta): (f64, f64) = (0.6, 2.0);
    let d = MmlDist::new(alpha, make_erlang(1, delta.powf(-alpha)).unwrap()).unwrap();
    let mut rng = RandomStream::new(21);
    let xs: Vec<f64> = (0..N).map(|_| sample_ml_scalar(alpha, delta, &mut rng)).collect();
    assert!(ks_statistic(&xs, |x| d.cdf(x).unwrap()) < ks_critical_1pct(N));
    let ys: Vec<f64> = (0..N).map(|_| sample_mml(&d, &mut rng)).collect();
    let (_, p) = ks_two_sample(&xs, &ys);
    assert!(p > 0.01, "two-sample p = {p}");
}

#[test]
fn mixing_quantile_round_trip() {
    for q in [0.1, 0.5, 0.9] {
        assert!((mixing_cdf(0.6, mixing_quantile(0.6, q)) - q).abs() < 1e-12);
    }
}

#[test]
fn identical_seeds_give_identical_samples() {
    let (_, d) = reference_models().remove(3);
    let p = pmml(&d, 1.3);
    let a = sample_pmml_n(&p, 1000, &mut RandomStream::new(5).split(2));
    let b = sample_pmml_n(&p, 1000, &mut RandomStream::new(5).split(2));
    let c = sample_pmml_n(&p, 1000, &mut RandomStream::new(5).split(3));
    assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    assert_ne!(a, c);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samples_are_positive_and_finite(alpha in 0.05f64..1.0, seed in any::<u64>()) {
        let mut rng = RandomStream::new(seed);
        for _ in 0..50 {
            let s = sample_positive_stable(alpha, &mut rng);
            prop_assert!(s > 0.0 && !s.is_nan());
            let x = sample_ml_scalar(alpha, 1.5, &mut rng);
            prop_assert!(x >= 0.0 && !x.is_nan());
        }
    }
}
