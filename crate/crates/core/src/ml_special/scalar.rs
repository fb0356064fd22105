//! Scalar Mittag-Leffler function E_{α,β}(z) and its derivatives.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::contour::contour_shifted;
use super::gamma::rgamma;
use crate::error::{MmlError, Regime, Result};

/// Radius of the disc around the origin served by the power series.
pub const SERIES_RADIUS: f64 = 1.0;
/// The asymptotic expansion is attempted once |z|^{1/α} reaches this value.
pub const ASYMPTOTIC_RADIUS: f64 = 38.0;
pub const DEFAULT_ACCURACY: f64 = 1e-12;
pub const MAX_DERIVATIVE: usize = 64;

const SERIES_TERM_CAP: usize = 60_000;
const ASYMPTOTIC_TERM_CAP: usize = 400;

/// Indices of E_{α,β} together with the requested relative accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlParams {
    pub alpha: f64,
    pub beta: f64,
    pub accuracy_target: f64,
}

impl MlParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = MlParams {
            alpha,
            beta,
            accuracy_target: DEFAULT_ACCURACY,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_accuracy(mut self, target: f64) -> Result<Self> {
        self.accuracy_target = target;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(MmlError::InvalidParameter(format!(
                "alpha = {} must lie in (0, 2)",
                self.alpha
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(MmlError::InvalidParameter(format!(
                "beta = {} must be positive",
                self.beta
            )));
        }
        if !(1e-14..=1e-6).contains(&self.accuracy_target) {
            return Err(MmlError::InvalidParameter(format!(
                "accuracy target {} outside [1e-14, 1e-6]",
                self.accuracy_target
            )));
        }
        Ok(())
    }
}

/// E_{α,β}(z).
pub fn ml_eval(params: &MlParams, z: C64) -> Result<C64> {
    params.validate()?;
    check_arg(z)?;
    Ok(derivs(params.alpha, params.beta, z, 0, params.accuracy_target, None)?[0])
}

/// E_{α,β}(z) evaluated in a prescribed regime, bypassing the automatic
/// selection. Used to compare neighbouring regimes across their boundary.
pub fn ml_eval_in(params: &MlParams, z: C64, regime: Regime) -> Result<C64> {
    params.validate()?;
    check_arg(z)?;
    Ok(derivs(
        params.alpha,
        params.beta,
        z,
        0,
        params.accuracy_target,
        Some(regime),
    )?[0])
}

/// The regime the automatic selection picks for z.
pub fn ml_regime(params: &MlParams, z: C64) -> Regime {
    select(params.alpha, params.beta, z)
}

/// k-th derivative E^{(k)}_{α,β}(z).
pub fn ml_deriv(params: &MlParams, z: C64, k: usize) -> Result<C64> {
    Ok(ml_derivs(params, z, k)?[k])
}

/// All derivatives E^{(j)}_{α,β}(z) for j = 0..=k.
pub fn ml_derivs(params: &MlParams, z: C64, k: usize) -> Result<Vec<C64>> {
    params.validate()?;
    check_arg(z)?;
    if k > MAX_DERIVATIVE {
        return Err(MmlError::InvalidParameter(format!(
            "derivative order {k} exceeds {MAX_DERIVATIVE}"
        )));
    }
    derivs(params.alpha, params.beta, z, k, params.accuracy_target, None)
}

/// Derivatives 0..=k at a real argument, without parameter validation.
/// Internal callers may pass any real β.
pub(crate) fn derivs_real(alpha: f64, beta: f64, x: f64, k: usize, tol: f64) -> Result<Vec<f64>> {
    Ok(derivs(alpha, beta, C64::new(x, 0.0), k, tol, None)?
        .into_iter()
        .map(|v| v.re)
        .collect())
}

fn check_arg(z: C64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(MmlError::InvalidParameter(format!("argument {z} is not finite")))
    }
}

fn is_integer(x: f64) -> bool {
    x == x.round()
}

/// True when 1/Γ(x) is zero up to rounding in x itself (x a non-positive
/// integer computed as a difference of non-representable numbers).
fn near_pole(x: f64) -> bool {
    x < 0.5 && (x - x.round()).abs() <= 1e-12 * x.abs().max(1.0)
}

fn in_algebraic_sector(alpha: f64, z: C64) -> bool {
    alpha < 1.0 && z.arg().abs() >= (1.0 + alpha) * std::f64::consts::FRAC_PI_2
}

fn select(alpha: f64, beta: f64, z: C64) -> Regime {
    let r = z.norm();
    if alpha == 1.0 && is_integer(beta) {
        Regime::Closed
    } else if r <= SERIES_RADIUS {
        Regime::Series
    } else if in_algebraic_sector(alpha, z) && r.powf(1.0 / alpha) >= ASYMPTOTIC_RADIUS {
        Regime::Asymptotic
    } else {
        Regime::Contour
    }
}

fn contour_log_eps(tol: f64) -> f64 {
    (tol * 1e-3).max(1e-15).ln()
}

pub(crate) fn derivs(
    alpha: f64,
    beta: f64,
    z: C64,
    k: usize,
    tol: f64,
    forced: Option<Regime>,
) -> Result<Vec<C64>> {
    if z == C64::new(0.0, 0.0) {
        // E^{(j)}(0) = j!/Γ(αj + β)
        let mut fact = 1.0;
        return Ok((0..=k)
            .map(|j| {
                if j > 0 {
                    fact *= j as f64;
                }
                C64::new(fact * rgamma(alpha * j as f64 + beta), 0.0)
            })
            .collect());
    }
    let regime = forced.unwrap_or_else(|| select(alpha, beta, z));
    match regime {
        Regime::Closed => closed_derivs(beta, z, k),
        Regime::Series => series_derivs(alpha, beta, z, k),
        Regime::Asymptotic => {
            if !(alpha < 1.0) {
                return Err(MmlError::eval(
                    Regime::Asymptotic,
                    "algebraic expansion requires alpha < 1",
                ));
            }
            match asymptotic_derivs(alpha, beta, z, k, (tol * 0.1).max(1e-16)) {
                Some(v) => Ok(v),
                None if forced.is_some() => Err(MmlError::eval(
                    Regime::Asymptotic,
                    format!("expansion does not converge at z = {z}"),
                )),
                None => contour_derivs(alpha, beta, z, k, tol),
            }
        }
        Regime::Contour => contour_derivs(alpha, beta, z, k, tol),
        other => Err(MmlError::eval(
            other,
            "not a scalar evaluation regime".to_string(),
        )),
    }
}

/// Coefficients c_j^{(k)}, j = 0..=k, of
/// E^{(k)}_{α,β}(z) = (αz)^{-k} Σ_j c_j^{(k)} E_{α,β−j}(z).
pub fn recursion_coefficients(alpha: f64, beta: f64, k: usize) -> Result<Vec<f64>> {
    let mut c = vec![1.0];
    for m in 1..=k {
        let base = 1.0 - beta - alpha * (m as f64 - 1.0);
        let mut next = vec![0.0; m + 1];
        next[0] = base * c[0];
        for j in 1..m {
            next[j] = c[j - 1] + (base + j as f64) * c[j];
        }
        next[m] = 1.0;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(MmlError::eval(
                Regime::Recursion,
                format!("coefficient overflow at order {m}"),
            ));
        }
        c = next;
    }
    Ok(c)
}

fn combine_recursion(alpha: f64, beta: f64, z: C64, shifted: &[C64], k: usize) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(shifted[0]);
    let az = alpha * z;
    let mut scale = C64::new(1.0, 0.0);
    for m in 1..=k {
        scale /= az;
        let c = recursion_coefficients(alpha, beta, m)?;
        let sum: C64 = c.iter().zip(shifted).map(|(cj, e)| *cj * e).sum();
        let v = sum * scale;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(MmlError::eval(
                Regime::Recursion,
                format!("non-finite derivative of order {m} at z = {z}"),
            ));
        }
        out.push(v);
    }
    Ok(out)
}

fn contour_derivs(alpha: f64, beta: f64, z: C64, k: usize, tol: f64) -> Result<Vec<C64>> {
    let shifted = contour_shifted(alpha, beta, k + 1, z, contour_log_eps(tol))?;
    combine_recursion(alpha, beta, z, &shifted, k)
}

/// α = 1 with integer β: E_{1,1−m}(z) = z^m e^z for m ≥ 0 and
/// E_{1,m}(z) = (e^z − Σ_{j<m−1} z^j/j!)/z^{m−1} for m ≥ 2.
fn closed_derivs(beta: f64, z: C64, k: usize) -> Result<Vec<C64>> {
    let ez = z.exp();
    if beta == 1.0 {
        return Ok(vec![ez; k + 1]);
    }
    let r = z.norm();
    if r <= SERIES_RADIUS || (z.re >= 0.0 && r <= 2.0 * beta) {
        return series_derivs(1.0, beta, z, k);
    }
    let shifted: Vec<C64> = (0..=k)
        .map(|j| closed_value(beta - j as f64, z, ez))
        .collect();
    combine_recursion(1.0, beta, z, &shifted, k)
}

fn closed_value(beta: f64, z: C64, ez: C64) -> C64 {
    if beta <= 1.0 {
        let m = (1.0 - beta) as i32;
        return z.powi(m) * ez;
    }
    let m = beta as i32;
    let mut poly = C64::new(0.0, 0.0);
    let mut term = C64::new(1.0, 0.0);
    for j in 0..(m - 1) {
        if j > 0 {
            term = term * z / j as f64;
        }
        poly += term;
    }
    (ez - poly) / z.powi(m - 1)
}

/// Term-wise differentiated power series, all orders 0..=k in one pass:
/// E^{(j)}(z) = Σ_{n≥j} n!/(n−j)! z^{n−j} / Γ(αn + β).
fn series_derivs(alpha: f64, beta: f64, z: C64, k: usize) -> Result<Vec<C64>> {
    let mut sums = vec![C64::new(0.0, 0.0); k + 1];
    let mut abs_sums = vec![0.0; k + 1];
    let mut quiet = vec![0u8; k + 1];
    let mut pw = vec![C64::new(1.0, 0.0); k + 1];
    let mut ff = vec![1.0; k + 1];
    let n_min = k + (2.0 / alpha).ceil() as usize + 2;
    for n in 0..SERIES_TERM_CAP {
        let g = rgamma(alpha * n as f64 + beta);
        for j in 0..=k.min(n) {
            if n > j {
                pw[j] *= z;
                ff[j] *= n as f64 / (n - j) as f64;
            } else {
                ff[j] = (1..=j).map(|i| i as f64).product();
            }
            let term = pw[j] * (ff[j] * g);
            sums[j] += term;
            let mag = term.norm();
            abs_sums[j] += mag;
            if n >= n_min && mag <= 1e-17 * abs_sums[j] {
                quiet[j] = quiet[j].saturating_add(1);
            } else {
                quiet[j] = 0;
            }
        }
        if n >= n_min && (quiet.iter().all(|&q| q >= 2) || abs_sums.iter().all(|&a| a == 0.0)) {
            if sums.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                break;
            }
            return Ok(sums);
        }
        if ff.iter().any(|f| !f.is_finite()) {
            break;
        }
    }
    Err(MmlError::eval(
        Regime::Series,
        format!("differentiated series did not converge at z = {z}"),
    ))
}

/// Differentiated algebraic expansion
/// E^{(k)}(z) ~ −Σ_{n≥1} (−1)^k (n)_k z^{−n−k} / Γ(β − αn).
/// Returns None if the terms stop decreasing before reaching the tolerance.
fn asymptotic_derivs(alpha: f64, beta: f64, z: C64, k: usize, tol: f64) -> Option<Vec<C64>> {
    let w = z.inv();
    let mut out = Vec::with_capacity(k + 1);
    for order in 0..=k {
        let sign = if order % 2 == 0 { -1.0 } else { 1.0 };
        let mut rising: f64 = (1..=order).map(|i| i as f64).product();
        let mut wpow = w.powi(order as i32 + 1);
        let mut sum = C64::new(0.0, 0.0);
        let mut smallest = f64::INFINITY;
        let mut converged = false;
        for n in 1..=ASYMPTOTIC_TERM_CAP {
            let arg = beta - alpha * n as f64;
            if !near_pole(arg) {
                let g = rgamma(arg);
                let term = wpow * (sign * rising * g);
                let mag = term.norm();
                if !mag.is_finite() {
                    return None;
                }
                sum += term;
                if mag <= tol * sum.norm() {
                    converged = true;
                    break;
                }
                // magnitudes oscillate; only a clear rise past the smallest
                // term so far signals the divergent part of the expansion
                if mag > 100.0 * smallest && n > order + 2 {
                    return None;
                }
                smallest = smallest.min(mag);
            }
            wpow *= w;
            rising *= (n + order) as f64 / n as f64;
        }
        if !converged {
            return None;
        }
        out.push(sum);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> MlParams {
        MlParams::new(a, b).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn exponential_case() {
        let v = ml_eval(&p(1.0, 1.0), re(-1.0)).unwrap().re;
        assert!(rel(v, (-1.0f64).exp()) < 1e-15);
        let d = ml_deriv(&p(1.0, 1.0), re(0.5), 3).unwrap().re;
        assert!(rel(d, 0.5f64.exp()) < 1e-15);
    }

    #[test]
    fn origin_value() {
        assert_eq!(ml_eval(&p(0.5, 1.0), re(0.0)).unwrap().re, 1.0);
    }

    #[test]
    fn erfc_closed_form_at_minus_two() {
        let v = ml_eval(&p(0.5, 1.0), re(-2.0)).unwrap().re;
        assert!(rel(v, 0.255_395_676_310_505_743_87) < 1e-12, "{v}");
    }

    #[test]
    fn second_derivative_oracle() {
        let v = ml_deriv(&p(0.7, 0.7), re(-1.0), 2).unwrap().re;
        assert!(rel(v, 0.336_313_751_746_631_040_35) < 1e-10, "{v}");
    }

    #[test]
    fn first_derivative_oracle() {
        let v = ml_deriv(&p(0.8, 0.8), re(-1.0), 1).unwrap().re;
        assert!(rel(v, 0.285_807_970_142_063_848_17) < 1e-10, "{v}");
    }

    #[test]
    fn closed_forms_for_integer_beta() {
        let z = re(-7.5);
        let e2 = ml_eval(&p(1.0, 2.0), z).unwrap().re;
        assert!(rel(e2, ((-7.5f64).exp() - 1.0) / -7.5) < 1e-14);
        let e3 = ml_eval(&p(1.0, 3.0), z).unwrap().re;
        assert!(rel(e3, ((-7.5f64).exp() - 1.0 + 7.5) / 56.25) < 1e-14);
    }

    #[test]
    fn recursion_coefficients_first_order() {
        let c = recursion_coefficients(0.6, 0.9, 1).unwrap();
        assert!((c[0] - 0.1).abs() < 1e-15);
        assert_eq!(c[1], 1.0);
        let c2 = recursion_coefficients(0.5, 1.0, 2).unwrap();
        // c_0 = (1−β)(1−β−α), c_1 = (1−β) + (1−β−α+1), c_2 = 1
        assert!((c2[0] - 0.0).abs() < 1e-15);
        assert!((c2[1] - 0.5).abs() < 1e-15);
        assert_eq!(c2[2], 1.0);
    }

    #[test]
    fn regimes_are_selected() {
        let q = p(0.5, 1.0);
        assert_eq!(ml_regime(&q, re(-0.5)), Regime::Series);
        assert_eq!(ml_regime(&q, re(-3.0)), Regime::Contour);
        assert_eq!(ml_regime(&q, re(-10.0)), Regime::Asymptotic);
        assert_eq!(ml_regime(&q, re(10.0)), Regime::Contour);
        assert_eq!(ml_regime(&p(1.0, 2.0), re(10.0)), Regime::Closed);
    }

    #[test]
    fn forced_regimes_agree_on_overlap() {
        let q = p(0.6, 0.8);
        for x in [-1.5, -2.5, -4.0] {
            let s = ml_eval_in(&q, re(x), Regime::Series).unwrap().re;
            let c = ml_eval_in(&q, re(x), Regime::Contour).unwrap().re;
            assert!(rel(s, c) < 1e-10, "x = {x}: {s} vs {c}");
        }
    }

    #[test]
    fn complex_argument_against_series() {
        let q = p(0.75, 1.2);
        let z = C64::new(0.9, 1.3);
        let s = ml_eval_in(&q, z, Regime::Series).unwrap();
        let c = ml_eval_in(&q, z, Regime::Contour).unwrap();
        assert!((s - c).norm() / s.norm() < 1e-11, "{s} vs {c}");
    }

    #[test]
    fn growth_on_positive_axis() {
        // E_{1/2,1}(x) = e^{x^2} erfc(-x)
        let v = ml_eval(&p(0.5, 1.0), re(3.0)).unwrap().re;
        let expected = 9f64.exp() * (1.0 + libm::erf(3.0));
        assert!(rel(v, expected) < 1e-12, "{v} vs {expected}");
    }

    #[test]
    fn shifted_contour_values() {
        // E_{0.7,0.7−j}(−6), 60-digit series
        let expected = [
            0.008_211_522_829_985_733_940_1,
            -0.014_957_950_469_457_450_058_9,
            0.042_239_059_512_534_681_278_7,
            -0.160_445_420_769_529_516_545_6,
            0.762_523_327_218_597_064_426_3,
        ];
        let shared = contour_shifted(0.7, 0.7, 5, re(-6.0), contour_log_eps(1e-12)).unwrap();
        for (j, (v, e)) in shared.iter().zip(expected).enumerate() {
            assert!((v.re - e).abs() < 1e-14 * (1.0 + e.abs()), "j = {j}: {v} vs {e}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MlParams::new(0.0, 1.0).is_err());
        assert!(MlParams::new(2.0, 1.0).is_err());
        assert!(MlParams::new(0.5, 0.0).is_err());
        assert!(p(0.5, 1.0).with_accuracy(1e-16).is_err());
        assert!(ml_deriv(&p(0.5, 1.0), re(1.0), 65).is_err());
    }
}
