//! Inverse Laplace evaluation of E_{α,β}(z) on an optimal parabolic contour
//! (Garrappa's OPC scheme with γ = 1).
//!
//! E_{α,β}(z) is the inverse transform at t = 1 of s^{α−β}/(s^α − z). The
//! contour s(u) = μ(iu + 1)² is tuned against the singularities of the
//! transform, and poles left of the contour are added back as residues.
//!
//! [`contour_shifted`] evaluates E_{α,β−j}(z) for j = 0..count on one shared
//! set of nodes: the integrands differ only by a factor s^j.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{MmlError, Regime, Result};

const LOG_MACH_EPS: f64 = -36.043_653_389_117_154;
const MAX_NODES: usize = 200;

struct Param {
    mu: f64,
    h: f64,
    n: usize,
}

/// E_{α,β−j}(z) for j in 0..count.
pub(crate) fn contour_shifted(
    alpha: f64,
    beta: f64,
    count: usize,
    z: C64,
    log_eps: f64,
) -> Result<Vec<C64>> {
    let abs_z = z.norm();
    let theta = z.arg();

    // poles of the transform on the principal sheet
    let kmin = (-alpha / 2.0 - theta / (2.0 * PI)).ceil() as i64;
    let kmax = (alpha / 2.0 - theta / (2.0 * PI)).floor() as i64;
    let radius = abs_z.powf(1.0 / alpha);
    let mut poles: Vec<(f64, C64)> = (kmin..=kmax)
        .map(|k| {
            let s = C64::from_polar(radius, (theta + 2.0 * PI * k as f64) / alpha);
            ((s.re + s.norm()) / 2.0, s)
        })
        .filter(|(phi, _)| *phi > 1e-15)
        .collect();
    poles.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut s_star = vec![C64::new(0.0, 0.0)];
    let mut phi = vec![0.0];
    for (ph, s) in &poles {
        s_star.push(*s);
        phi.push(*ph);
    }
    let j1 = s_star.len();
    let mut p = vec![f64::max(0.0, -2.0 * (alpha - beta + 1.0))];
    p.extend(std::iter::repeat_n(1.0, j1 - 1));
    let mut q = vec![1.0; j1 - 1];
    q.push(f64::INFINITY);
    phi.push(f64::INFINITY);

    let mut log_eps = log_eps;
    let (region, par) = loop {
        let admissible: Vec<usize> = (0..j1)
            .filter(|&j| phi[j] < log_eps - LOG_MACH_EPS && phi[j] < phi[j + 1])
            .collect();
        if admissible.is_empty() {
            return Err(MmlError::eval(
                Regime::Contour,
                format!("no admissible integration region for z = {z}"),
            ));
        }
        let mut best: Option<(usize, Param)> = None;
        for &j in &admissible {
            let cand = if j < j1 - 1 {
                optimal_rb(phi[j], phi[j + 1], p[j], q[j], log_eps)
            } else {
                optimal_ru(phi[j], p[j], log_eps)
            };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|(_, b)| c.n < b.n) {
                    best = Some((j, c));
                }
            }
        }
        match best {
            Some((j, c)) if c.n <= MAX_NODES => break (j, c),
            _ if log_eps < -2.0 => log_eps += std::f64::consts::LN_10,
            _ => {
                return Err(MmlError::eval(
                    Regime::Contour,
                    format!("node budget exhausted for z = {z}"),
                ))
            }
        }
    };

    let n = extend_for_shift(&par, count.saturating_sub(1));
    let (mu, h) = (par.mu, par.h);
    let real_input = z.im == 0.0;

    let mut sums = vec![C64::new(0.0, 0.0); count];
    let node = |u: f64| -> (C64, C64) {
        let s = mu * C64::new(1.0, u).powi(2);
        let ds = C64::new(-2.0 * mu * u, 2.0 * mu);
        let ln_s = s.ln();
        let s_alpha = (alpha * ln_s).exp();
        let base = ((alpha - beta) * ln_s + s).exp() / (s_alpha - z) * ds;
        (s, base)
    };
    let accumulate = |s: C64, mut term: C64, weight: f64, sums: &mut [C64]| {
        for acc in sums.iter_mut() {
            *acc += weight * term;
            term *= s;
        }
    };
    if real_input {
        // conjugate symmetry: only the imaginary parts of the upper half survive
        let (s0, b0) = node(0.0);
        accumulate(s0, b0, 1.0, &mut sums);
        for k in 1..=n {
            let (s, b) = node(h * k as f64);
            accumulate(s, b, 2.0, &mut sums);
        }
        for acc in sums.iter_mut() {
            *acc = C64::new(h * acc.im / (2.0 * PI), 0.0);
        }
    } else {
        for k in -(n as i64)..=(n as i64) {
            let (s, b) = node(h * k as f64);
            accumulate(s, b, 1.0, &mut sums);
        }
        let scale = C64::new(0.0, 2.0 * PI);
        for acc in sums.iter_mut() {
            *acc = *acc * h / scale;
        }
    }

    for s in &s_star[region + 1..] {
        let lead = (1.0 - beta) * s.ln() + s;
        let mut r = lead.exp() / alpha;
        for acc in sums.iter_mut() {
            *acc += if real_input { C64::new(r.re, 0.0) } else { r };
            r *= s;
        }
    }

    if sums.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(MmlError::eval(
            Regime::Contour,
            format!("non-finite quadrature sum at z = {z}"),
        ));
    }
    Ok(sums)
}

/// Extra nodes needed so that the truncation error of the integrand scaled by
/// s^shift stays at the level designed for the unshifted integrand.
fn extend_for_shift(par: &Param, shift: usize) -> usize {
    if shift == 0 {
        return par.n;
    }
    let tail = |n: usize| {
        let u2 = (par.h * n as f64).powi(2);
        par.mu * (1.0 - u2) + shift as f64 * (par.mu * (1.0 + u2)).ln().max(0.0)
    };
    let target = par.mu * (1.0 - (par.h * par.n as f64).powi(2));
    let mut n = par.n;
    while tail(n) > target && n < 8 * MAX_NODES {
        n += 1;
    }
    n
}

fn optimal_rb(phi_j: f64, phi_j1: f64, pj: f64, qj: f64, log_eps: f64) -> Option<Param> {
    const FAC: f64 = 1.01;
    let f_max = (log_eps - LOG_MACH_EPS).exp();
    let sq_j = phi_j.sqrt();
    let threshold = 2.0 * (log_eps - LOG_MACH_EPS).sqrt();
    let sq_j1 = phi_j1.sqrt().min(threshold - sq_j);

    let (bar_j, bar_j1, f_bar) = if pj < 1e-14 && qj < 1e-14 {
        (sq_j, sq_j1, 1.0)
    } else if pj < 1e-14 {
        let f_min = if sq_j > 0.0 {
            FAC * (sq_j / (sq_j1 - sq_j)).powf(qj)
        } else {
            FAC
        };
        if f_min >= f_max {
            return None;
        }
        let f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fq = f_bar.powf(-1.0 / qj);
        (sq_j, (2.0 * sq_j1 - fq * sq_j) / (2.0 + fq), f_bar)
    } else if qj < 1e-14 {
        let f_min = FAC * (sq_j1 / (sq_j1 - sq_j)).powf(pj);
        if f_min >= f_max {
            return None;
        }
        let f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fp = f_bar.powf(-1.0 / pj);
        ((2.0 * sq_j + fp * sq_j1) / (2.0 - fp), sq_j1, f_bar)
    } else {
        let f_min = FAC * (sq_j + sq_j1) / (sq_j1 - sq_j).powf(pj.max(qj));
        if f_min >= f_max {
            return None;
        }
        let f_min = f_min.max(1.5);
        let f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fp = f_bar.powf(-1.0 / pj);
        let fq = f_bar.powf(-1.0 / qj);
        let w = -phi_j1 / log_eps;
        let den = 2.0 + w - (1.0 + w) * fp + fq;
        (
            ((2.0 + w + fq) * sq_j + fp * sq_j1) / den,
            (-(1.0 + w) * fq * sq_j + (2.0 + w - (1.0 + w) * fp) * sq_j1) / den,
            f_bar,
        )
    };

    let log_eps = log_eps - f_bar.ln();
    let w = -bar_j1 * bar_j1 / log_eps;
    let mu = (((1.0 + w) * bar_j + bar_j1) / (2.0 + w)).powi(2);
    let h = -2.0 * PI / log_eps * (bar_j1 - bar_j) / ((1.0 + w) * bar_j + bar_j1);
    let n = ((1.0 - log_eps / mu).sqrt() / h).ceil();
    finite_param(mu, h, n)
}

fn optimal_ru(phi_j: f64, pj: f64, log_eps: f64) -> Option<Param> {
    const F_MIN: f64 = 1.0;
    const F_MAX: f64 = 10.0;
    const F_TAR: f64 = 5.0;
    let sq_phi = phi_j.sqrt();
    let mut phibar = if phi_j > 0.0 { phi_j * 1.01 } else { 0.01 };
    let mut sq_phibar = phibar.sqrt();

    let (mut n, mut a, mut sq_mu);
    let mut guard = 0;
    loop {
        let log_eps_phi = log_eps / phibar;
        n = (phibar / PI * (1.0 - 1.5 * log_eps_phi + (1.0 - 2.0 * log_eps_phi).sqrt())).ceil();
        a = PI * n / phibar;
        sq_mu = sq_phibar * (4.0 - a).abs() / (7.0 - (1.0 + 12.0 * a).sqrt()).abs();
        let fbar = ((sq_phibar - sq_phi) / sq_mu).powf(-pj);
        guard += 1;
        if pj < 1e-14 || (F_MIN < fbar && fbar < F_MAX) || guard > 100 {
            break;
        }
        sq_phibar = F_TAR.powf(-1.0 / pj) * sq_mu + sq_phi;
        phibar = sq_phibar * sq_phibar;
    }
    let mut mu = sq_mu * sq_mu;
    let mut h = (-3.0 * a - 2.0 + 2.0 * (1.0 + 12.0 * a).sqrt()) / (4.0 - a) / n;

    // keep round-off under control
    let threshold = log_eps - LOG_MACH_EPS;
    if mu > threshold {
        let qv = if pj.abs() < 1e-14 {
            0.0
        } else {
            F_TAR.powf(-1.0 / pj) * mu.sqrt()
        };
        let phibar = (qv + phi_j.sqrt()).powi(2);
        if phibar < threshold {
            let w = (LOG_MACH_EPS / (LOG_MACH_EPS - log_eps)).sqrt();
            let u = (-phibar / LOG_MACH_EPS).sqrt();
            mu = threshold;
            n = (w * log_eps / (2.0 * PI) / (u * w - 1.0)).ceil();
            h = w / n;
        } else {
            return None;
        }
    }
    finite_param(mu, h, n)
}

fn finite_param(mu: f64, h: f64, n: f64) -> Option<Param> {
    if mu.is_finite() && h.is_finite() && h > 0.0 && n.is_finite() && n >= 1.0 {
        Some(Param {
            mu,
            h,
            n: n as usize,
        })
    } else {
        None
    }
}
