//! Reciprocal gamma helpers that stay finite at the poles of Γ.

/// 1/Γ(x), exactly zero at the non-positive integers.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x.abs() < 170.0 {
        return 1.0 / libm::tgamma(x);
    }
    let (ln_abs, sign) = libm::lgamma_r(x);
    f64::from(sign) * (-ln_abs).exp()
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}
