#![allow(dead_code)]

use mml::phase_type::{make_coxian, make_erlang, make_mixture_erlang};
use mml::{MmlDist, PmmlDist};

/// The six reference models used across the distribution, sampler and
/// acceptance tests.
pub fn reference_models() -> Vec<(&'static str, MmlDist)> {
    vec![
        ("erlang1_a0.5", MmlDist::new(0.5, make_erlang(1, 1.0).unwrap()).unwrap()),
        ("erlang4_a0.7", MmlDist::new(0.7, make_erlang(4, 2.0).unwrap()).unwrap()),
        ("erlang4_a0.5", MmlDist::new(0.5, make_erlang(4, 2.0).unwrap()).unwrap()),
        (
            "mixture3_a0.9",
            MmlDist::new(
                0.9,
                make_mixture_erlang(&[0.5, 0.2, 0.3], &[5, 3, 4], &[20.0, 1.0, 0.03]).unwrap(),
            )
            .unwrap(),
        ),
        (
            "coxian4_a0.9",
            MmlDist::new(0.9, make_coxian(&[0.5, 0.0, 0.5, 0.0], &[1.0, 2.0, 3.0, 4.0]).unwrap())
                .unwrap(),
        ),
        (
            "coxian4_a0.7",
            MmlDist::new(
                0.7,
                make_coxian(&[0.25, 0.25, 0.25, 0.25], &[1.0, 2.0, 3.0, 4.0]).unwrap(),
            )
            .unwrap(),
        ),
    ]
}

pub fn pmml(d: &MmlDist, nu: f64) -> PmmlDist {
    PmmlDist::new(d.clone(), nu).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (l, h) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l + (h - l) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// ∫_lo^hi f(x) dx through the substitution x = e^s, split into unit-width
/// pieces in s. Suited to integrands with power-law behaviour at both ends.
pub fn integrate_log<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let (a, b) = (lo.ln(), hi.ln());
    let pieces = ((b - a) / 1.0).ceil().max(1.0) as usize;
    let w = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let s0 = a + w * i as f64;
            quadrature::integrate(|s: f64| {
                let x = s.exp();
                f(x) * x
            }, s0, s0 + w, 1e-12)
            .integral
        })
        .sum()
}
