//! Exact samplers for positive stable, MML, PMML and scalar Mittag-Leffler
//! laws, plus the seeded stream type every sampler draws from.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use std::f64::consts::PI;

use crate::distribution::{MmlDist, PmmlDist};
use crate::phase_type::PhGenerator;

/// Deterministic random stream. Children produced by [`RandomStream::split`]
/// depend only on the parent seed and the child index, never on how many
/// values the parent has already produced.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream number `index`.
    pub fn split(&self, index: u64) -> RandomStream {
        RandomStream::new(splitmix(splitmix(self.seed) ^ splitmix(index.wrapping_add(0x5851_F42D))))
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn uniform_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// One draw of S_α with E[e^{−uS}] = e^{−u^α}, by Kanter's representation
/// S = (A(U)/W)^{(1−α)/α} with U uniform on (0, π) and W unit exponential.
/// S₁ is the constant 1.
pub fn sample_positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let u = PI * uniform_open(rng);
    let w: f64 = rng.sample(Exp1);
    // logarithmic form; the powers 1/(1−α) overflow as α → 1
    let b = (1.0 - alpha) / alpha;
    let ln_s = (alpha * u).sin().ln() - u.sin().ln() / alpha
        + b * (((1.0 - alpha) * u).sin().ln() - w.ln());
    ln_s.exp()
}

/// W^{1/α} S_α with W drawn from the phase-type component.
pub fn sample_mml<R: Rng + ?Sized>(d: &MmlDist, rng: &mut R) -> f64 {
    mml_from_ph(d.alpha(), d.ph(), rng)
}

fn mml_from_ph<R: Rng + ?Sized>(alpha: f64, ph: &PhGenerator, rng: &mut R) -> f64 {
    let w = ph.sample(rng);
    if alpha == 1.0 {
        return w;
    }
    w.powf(1.0 / alpha) * sample_positive_stable(alpha, rng)
}

pub fn sample_pmml<R: Rng + ?Sized>(d: &PmmlDist, rng: &mut R) -> f64 {
    let x = mml_from_ph(d.alpha(), d.ph(), rng);
    if d.nu() == 1.0 {
        x
    } else {
        x.powf(1.0 / d.nu())
    }
}

pub fn sample_pmml_n(d: &PmmlDist, n: usize, rng: &mut RandomStream) -> Vec<f64> {
    (0..n).map(|_| sample_pmml(d, rng)).collect()
}

/// Distribution function of the mixing variable R in X = δ Z R^{1/α}:
/// F_R(x) = (1/(πα)) [arctan(x/sin(απ) + cot(απ)) − π/2] + 1.
///
/// The angle is απ, not απ/2. Only with απ does δ Z R^{1/α} reproduce the
/// transform 1/(1 + (δu)^α); the half-angle version fails a direct
/// Laplace-transform check.
pub fn mixing_cdf(alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let h = alpha * PI;
    let v = ((x / h.sin() + 1.0 / h.tan()).atan() - PI / 2.0) / h + 1.0;
    v.clamp(0.0, 1.0)
}

/// Closed-form inverse of [`mixing_cdf`]: sin(qαπ) / sin((1−q)απ).
pub fn mixing_quantile(alpha: f64, q: f64) -> f64 {
    let h = alpha * PI;
    (q * h).sin() / ((1.0 - q) * h).sin()
}

/// Mittag-Leffler variable with E[e^{−uX}] = 1/(1 + (δu)^α), drawn through
/// Kozubowski's representation δ Z R^{1/α}. At α = 1 this is δ Z.
pub fn sample_ml_scalar<R: Rng + ?Sized>(alpha: f64, delta: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(Exp1);
    if alpha >= 1.0 {
        return delta * z;
    }
    let r = mixing_quantile(alpha, uniform_open(rng));
    delta * z * r.powf(1.0 / alpha)
}
