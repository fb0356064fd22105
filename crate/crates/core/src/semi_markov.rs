//! Semi-Markov processes with Mittag-Leffler sojourn times.
//!
//! A transient state i holds for an ML(α) time with Laplace transform
//! λᵢ/(λᵢ + u^α) and then jumps according to row i of the embedded chain Q.
//! The time to absorption is MML(α, π, T) with T = diag(λ)(Q − I) restricted
//! to the transient states.

use nalgebra::DMatrix;
use rand::Rng;
use serde_json::{json, Value};

use crate::error::{MmlError, Result};
use crate::ml_special::{ml_matrix_unchecked, DEFAULT_ACCURACY};
use crate::phase_type::{doc_err, field, make_general, pick, read_f64, read_matrix, read_vec, PhGenerator};
use crate::sampling::sample_ml_scalar;

/// Paths longer than this are reported as non-absorbing.
pub const MAX_JUMPS: u64 = 10_000_000;

const ROW_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SemiMarkovSpec {
    q: DMatrix<f64>,
    rates: Vec<f64>,
    alpha: f64,
    pi: Vec<f64>,
    ph: PhGenerator,
}

fn spec_err(msg: impl Into<String>) -> MmlError {
    MmlError::InvalidSpec(msg.into())
}

impl SemiMarkovSpec {
    /// `q` is (p+1)×(p+1) with the last state absorbing.
    pub fn new(q: DMatrix<f64>, rates: Vec<f64>, alpha: f64, pi: Vec<f64>) -> Result<Self> {
        let n = q.nrows();
        if n < 2 || q.ncols() != n {
            return Err(spec_err(format!("Q must be square with at least 2 states, got {}x{}", n, q.ncols())));
        }
        let p = n - 1;
        if rates.len() != p || pi.len() != p {
            return Err(spec_err(format!(
                "{p} transient states but {} rates and {} initial probabilities",
                rates.len(),
                pi.len()
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(spec_err(format!("alpha = {alpha} must lie in (0, 1]")));
        }
        for (i, r) in rates.iter().enumerate() {
            if !(r.is_finite() && *r > 0.0) {
                return Err(spec_err(format!("rates[{i}] = {r} must be positive")));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = q[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(spec_err(format!("Q[{i}][{j}] = {v} is not a probability")));
                }
            }
            let s: f64 = q.row(i).sum();
            if (s - 1.0).abs() > ROW_TOL {
                return Err(spec_err(format!("row {i} of Q sums to {s}, not 1")));
            }
            if i < p && q[(i, i)] != 0.0 {
                return Err(spec_err(format!("Q[{i}][{i}] = {} must be 0 for a transient state", q[(i, i)])));
            }
        }
        if q[(p, p)] != 1.0 {
            return Err(spec_err("the last state of Q must be absorbing"));
        }
        let mut t = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                t[(i, j)] = if i == j { -rates[i] } else { rates[i] * q[(i, j)] };
            }
        }
        let ph = make_general(&pi, &t).map_err(|e| spec_err(e.to_string()))?;
        Ok(SemiMarkovSpec { q, rates, alpha, pi, ph })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn transient_states(&self) -> usize {
        self.rates.len()
    }

    pub fn embedded_chain(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// (π, T) read off the generator Λ with λᵢⱼ = λᵢqᵢⱼ and λᵢᵢ = −λᵢ.
    pub fn build_lambda(&self) -> &PhGenerator {
        &self.ph
    }

    /// The full (p+1)×(p+1) matrix Λ including the absorbing row.
    pub fn lambda_matrix(&self) -> DMatrix<f64> {
        let p = self.transient_states();
        let mut m = DMatrix::zeros(p + 1, p + 1);
        m.view_mut((0, 0), (p, p)).copy_from(self.ph.sub_intensity());
        for i in 0..p {
            m[(i, p)] = self.ph.exit()[i];
        }
        m
    }

    /// P(t) = E_{α,1}(Λ t^α). The transient block is E_{α,1}(T t^α); the
    /// absorbing column makes every row sum to one because Λ has zero row sums.
    pub fn transition_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(MmlError::InvalidParameter(format!("time {t} must be nonnegative")));
        }
        let p = self.transient_states();
        let mut out = DMatrix::identity(p + 1, p + 1);
        if t == 0.0 {
            return Ok(out);
        }
        let block = ml_matrix_unchecked(
            self.alpha,
            1.0,
            &(self.ph.sub_intensity() * t.powf(self.alpha)),
            DEFAULT_ACCURACY,
        )?;
        for i in 0..p {
            let mut s = 0.0;
            for j in 0..p {
                out[(i, j)] = block[(i, j)];
                s += block[(i, j)];
            }
            out[(i, p)] = (1.0 - s).max(0.0);
        }
        Ok(out)
    }

    /// Time to absorption of one simulated path.
    pub fn simulate_absorption<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let p = self.transient_states();
        let mut state = pick(rng, &self.pi);
        let mut time = 0.0;
        for _ in 0..MAX_JUMPS {
            let delta = self.rates[state].powf(-1.0 / self.alpha);
            time += sample_ml_scalar(self.alpha, delta, rng);
            let row: Vec<f64> = self.q.row(state).iter().copied().collect();
            state = pick(rng, &row);
            if state == p {
                return Ok(time);
            }
        }
        Err(MmlError::Runaway { jumps: MAX_JUMPS })
    }

    pub fn to_json(&self) -> Value {
        let q: Vec<Vec<f64>> = (0..self.q.nrows())
            .map(|i| self.q.row(i).iter().copied().collect())
            .collect();
        json!({"Q": q, "rates": self.rates, "alpha": self.alpha, "pi": self.pi})
    }

    pub fn from_json(doc: &Value, path: &str) -> Result<Self> {
        let obj = doc
            .as_object()
            .ok_or_else(|| doc_err(path, "expected an object"))?;
        let q = read_matrix(obj.get("Q"), &field(path, "Q"))?;
        let rates = read_vec(obj.get("rates"), &field(path, "rates"))?;
        let alpha = read_f64(obj.get("alpha"), &field(path, "alpha"))?;
        let pi = read_vec(obj.get("pi"), &field(path, "pi"))?;
        SemiMarkovSpec::new(q, rates, alpha, pi)
    }
}
