mod common;

use common::rel;
use mml::gof::{ks_critical_1pct, ks_statistic};
use mml::phase_type::{make_coxian, make_erlang, make_general, make_mixture_erlang, PhGenerator};
use mml::sampling::RandomStream;
use mml::MmlError;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn general3() -> PhGenerator {
    let t = DMatrix::from_row_slice(3, 3, &[-3.0, 1.0, 0.5, 0.2, -1.0, 0.3, 0.0, 0.4, -0.8]);
    make_general(&[0.6, 0.3, 0.1], &t).unwrap()
}

fn generators() -> Vec<PhGenerator> {
    vec![
        make_erlang(1, 2.0).unwrap(),
        make_erlang(4, 2.0).unwrap(),
        make_mixture_erlang(&[0.5, 0.2, 0.3], &[5, 3, 4], &[20.0, 1.0, 0.03]).unwrap(),
        make_coxian(&[0.5, 0.0, 0.5, 0.0], &[1.0, 2.0, 3.0, 4.0]).unwrap(),
        general3(),
    ]
}

#[test]
fn closed_form_values() {
    assert!(rel(make_erlang(1, 2.0).unwrap().pdf(1.0), 2.0 * (-2.0f64).exp()) < 1e-14);
    assert!(rel(make_erlang(2, 1.0).unwrap().pdf(3.0), 3.0 * (-3.0f64).exp()) < 1e-14);
    let cox = make_coxian(&[1.0, 0.0], &[1.0, 2.0]).unwrap();
    let e = std::f64::consts::E;
    assert!(rel(cox.pdf(1.0), 2.0 * (1.0 / e - 1.0 / (e * e))) < 1e-14);
    assert_eq!(make_erlang(1, 2.0).unwrap().cdf(0.0), 0.0);
    assert!(rel(make_erlang(1, 2.0).unwrap().cdf(1.0), 1.0 - (-2.0f64).exp()) < 1e-14);
    let mix = make_mixture_erlang(&[0.5, 0.5], &[1, 2], &[1.0, 1.0]).unwrap();
    let expected = 0.5 * (1.0 - (-2.0f64).exp()) + 0.5 * (1.0 - 3.0 * (-2.0f64).exp());
    assert!(rel(mix.cdf(2.0), expected) < 1e-14);
}

#[test]
fn constructors_build_displayed_matrices() {
    let e = make_erlang(2, 3.0).unwrap();
    assert_eq!(e.sub_intensity(), &DMatrix::from_row_slice(2, 2, &[-3.0, 3.0, 0.0, -3.0]));
    assert_eq!(e.pi().as_slice(), &[1.0, 0.0]);
    assert_eq!(e.exit().as_slice(), &[0.0, 3.0]);
    let single = make_mixture_erlang(&[1.0], &[2], &[3.0]).unwrap();
    assert_eq!(single, e);
    let c = make_coxian(&[0.5, 0.5], &[1.0, 2.0]).unwrap();
    assert_eq!(c.sub_intensity(), &DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -2.0]));
    assert_eq!(c.exit().as_slice(), &[0.0, 2.0]);
    assert!(matches!(
        make_coxian(&[0.5, 0.5], &[2.0, 2.0]),
        Err(MmlError::InvalidGenerator(_))
    ));
}

#[test]
fn invalid_generators_are_rejected() {
    let bad_row = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -1.0]);
    assert!(make_general(&[1.0, 0.0], &bad_row).is_err());
    let trapped = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
    assert!(make_general(&[1.0, 0.0], &trapped).is_err());
    let ok = DMatrix::from_row_slice(1, 1, &[-1.0]);
    assert!(make_general(&[0.7], &ok).is_err());
}

#[test]
fn moments() {
    assert!(rel(make_erlang(1, 1.0).unwrap().frac_moment(1.0).unwrap(), 1.0) < 1e-14);
    assert!(rel(make_erlang(2, 1.0).unwrap().frac_moment(2.0).unwrap(), 6.0) < 1e-13);
    // general path against the Erlang closed form
    let g = make_erlang(3, 1.5).unwrap().as_general();
    let a = 0.37;
    assert!(rel(g.frac_moment(a).unwrap(), make_erlang(3, 1.5).unwrap().frac_moment(a).unwrap()) < 1e-10);
}

#[test]
fn coxian_half_moment_by_monte_carlo() {
    let cox = make_coxian(&[1.0, 0.0], &[1.0, 2.0]).unwrap();
    let exact = cox.frac_moment(0.5).unwrap();
    let mut rng = RandomStream::new(11);
    let n = 400_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let v = cox.sample(&mut rng).sqrt();
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn density_integrates_to_one() {
    for g in generators() {
        // beyond X the survival function bounds the remaining mass
        let x_max = 2000.0;
        let mass = common::integrate_log(|x| g.pdf(x), 1e-12, x_max) + g.survival(x_max);
        assert!((mass - 1.0).abs() < 1e-8, "{:?}: {mass}", g.structure());
    }
}

#[test]
fn cdf_derivative_is_density() {
    // differences of the survival function avoid the rounding of F near 1
    let h = 1e-6;
    for g in generators() {
        for x in common::geomspace(0.1, 20.0, 25) {
            let d = (g.survival(x - h) - g.survival(x + h)) / (2.0 * h);
            let f = g.pdf(x);
            if f > 1e-6 {
                assert!(rel(d, f) < 1e-5, "{:?} x={x}: {d} vs {f}", g.structure());
            }
        }
    }
}

#[test]
fn structured_matches_general() {
    for g in generators() {
        let gen = g.as_general();
        for x in common::geomspace(0.01, 50.0, 30) {
            let (a, b) = (g.pdf(x), gen.pdf(x));
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300) + 1e-300, "{:?} x={x}: {a} vs {b}", g.structure());
            assert!((g.survival(x) - gen.survival(x)).abs() < 1e-10);
        }
    }
}

#[test]
fn sample_means_and_ks() {
    let mut rng = RandomStream::new(5);
    let n = 100_000;
    for (g, mean) in [(make_erlang(1, 4.0).unwrap(), 0.25), (make_erlang(4, 2.0).unwrap(), 2.0)] {
        let xs: Vec<f64> = (0..n).map(|_| g.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((m - mean).abs() < 3.0 * sd / (n as f64).sqrt());
    }
    let g = general3();
    let xs: Vec<f64> = (0..n).map(|_| g.sample(&mut rng)).collect();
    assert!(ks_statistic(&xs, |x| g.cdf(x)) < ks_critical_1pct(n));
}

#[test]
fn json_round_trip_and_errors() {
    for g in generators() {
        let back = PhGenerator::from_json(&g.to_json(), "ph").unwrap();
        assert_eq!(back, g);
    }
    let doc = serde_json::json!({"structure": "erlang", "p": 2, "lambda": -1.0});
    let err = PhGenerator::from_json(&doc, "model.ph").unwrap_err();
    assert!(err.to_string().contains("model.ph"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exit_vector_closes_rows(p in 1usize..6, l in 0.05f64..20.0, w in 0.0f64..1.0) {
        let gens = [
            make_erlang(p, l).unwrap(),
            make_mixture_erlang(&[w, 1.0 - w], &[p, p + 1], &[l, 2.0 * l + 0.1]).unwrap(),
            make_coxian(&vec![1.0 / p as f64; p], &(1..=p).map(|i| l * i as f64).collect::<Vec<_>>()).unwrap(),
        ];
        for g in gens {
            let r = g.sub_intensity() * nalgebra::DVector::from_element(g.dim(), 1.0) + g.exit();
            prop_assert!(r.amax() <= 1e-12 * l.max(1.0));
            let s = g.survival(1.0 / l);
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
