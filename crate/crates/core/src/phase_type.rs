//! Phase-type generators (π, T) and the law of the absorption time they define.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde_json::{json, Value};

use crate::error::{MmlError, Regime, Result};
use crate::ml_special::{gamma::ln_gamma, gamma::gamma, matrix_neg_power};

/// Absolute tolerance on rates and probability sums.
pub const RATE_TOL: f64 = 1e-12;
const PROB_TOL: f64 = 1e-10;

/// Declared structure of a generator. Structured generators have closed-form
/// densities in every distribution built on them.
#[derive(Debug, Clone, PartialEq)]
pub enum Structure {
    Erlang {
        p: usize,
        lambda: f64,
    },
    MixtureErlang {
        theta: Vec<f64>,
        p: Vec<usize>,
        lambda: Vec<f64>,
    },
    /// Chain 1 → 2 → … → p → absorption with rates λᵢ and arbitrary start.
    Coxian {
        lambda: Vec<f64>,
    },
    General,
}

impl Structure {
    pub fn name(&self) -> &'static str {
        match self {
            Structure::Erlang { .. } => "erlang",
            Structure::MixtureErlang { .. } => "mixture_erlang",
            Structure::Coxian { .. } => "coxian",
            Structure::General => "general",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhGenerator {
    pi: DVector<f64>,
    t: DMatrix<f64>,
    exit: DVector<f64>,
    structure: Structure,
    /// Largest real part among the eigenvalues of T (negative).
    decay: f64,
}

fn invalid(msg: impl Into<String>) -> MmlError {
    MmlError::InvalidGenerator(msg.into())
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must be a positive finite rate")))
    }
}

fn check_probabilities(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(invalid(format!("{name} is empty")));
    }
    if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
        return Err(invalid(format!("{name}[{i}] = {x} is not a probability")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > PROB_TOL {
        return Err(invalid(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

pub fn make_erlang(p: usize, lambda: f64) -> Result<PhGenerator> {
    if p == 0 {
        return Err(invalid("Erlang shape must be at least 1"));
    }
    check_rate("lambda", lambda)?;
    let mut t = DMatrix::zeros(p, p);
    for i in 0..p {
        t[(i, i)] = -lambda;
        if i + 1 < p {
            t[(i, i + 1)] = lambda;
        }
    }
    let mut pi = DVector::zeros(p);
    pi[0] = 1.0;
    PhGenerator::assemble(pi, t, Structure::Erlang { p, lambda })
}

/// Block-diagonal mixture of Erlang laws. A single component yields the plain
/// Erlang generator.
pub fn make_mixture_erlang(theta: &[f64], p: &[usize], lambda: &[f64]) -> Result<PhGenerator> {
    if theta.len() != p.len() || p.len() != lambda.len() {
        return Err(invalid(format!(
            "mixture vectors differ in length: theta {}, p {}, lambda {}",
            theta.len(),
            p.len(),
            lambda.len()
        )));
    }
    check_probabilities("theta", theta)?;
    if p.len() == 1 {
        return make_erlang(p[0], lambda[0]);
    }
    for (i, (&pi, &li)) in p.iter().zip(lambda).enumerate() {
        if pi == 0 {
            return Err(invalid(format!("p[{i}] must be at least 1")));
        }
        check_rate(&format!("lambda[{i}]"), li)?;
    }
    let dim: usize = p.iter().sum();
    let mut t = DMatrix::zeros(dim, dim);
    let mut pi = DVector::zeros(dim);
    let mut off = 0;
    for ((&th, &pk), &lk) in theta.iter().zip(p).zip(lambda) {
        pi[off] = th;
        for i in 0..pk {
            t[(off + i, off + i)] = -lk;
            if i + 1 < pk {
                t[(off + i, off + i + 1)] = lk;
            }
        }
        off += pk;
    }
    PhGenerator::assemble(
        pi,
        t,
        Structure::MixtureErlang {
            theta: theta.to_vec(),
            p: p.to_vec(),
            lambda: lambda.to_vec(),
        },
    )
}

pub fn make_coxian(pi: &[f64], lambda: &[f64]) -> Result<PhGenerator> {
    if pi.len() != lambda.len() {
        return Err(invalid(format!(
            "pi has length {} but lambda has length {}",
            pi.len(),
            lambda.len()
        )));
    }
    check_probabilities("pi", pi)?;
    for (i, &l) in lambda.iter().enumerate() {
        check_rate(&format!("lambda[{i}]"), l)?;
    }
    for i in 0..lambda.len() {
        for j in 0..i {
            if lambda[i] == lambda[j] {
                return Err(invalid(format!(
                    "Coxian rates must be distinct: lambda[{j}] = lambda[{i}] = {}",
                    lambda[i]
                )));
            }
        }
    }
    let p = lambda.len();
    let mut t = DMatrix::zeros(p, p);
    for i in 0..p {
        t[(i, i)] = -lambda[i];
        if i + 1 < p {
            t[(i, i + 1)] = lambda[i];
        }
    }
    PhGenerator::assemble(
        DVector::from_column_slice(pi),
        t,
        Structure::Coxian {
            lambda: lambda.to_vec(),
        },
    )
}

pub fn make_general(pi: &[f64], t: &DMatrix<f64>) -> Result<PhGenerator> {
    if t.nrows() != t.ncols() || t.nrows() != pi.len() {
        return Err(invalid(format!(
            "T is {}x{} but pi has length {}",
            t.nrows(),
            t.ncols(),
            pi.len()
        )));
    }
    check_probabilities("pi", pi)?;
    PhGenerator::assemble(DVector::from_column_slice(pi), t.clone(), Structure::General)
}

impl PhGenerator {
    fn assemble(pi: DVector<f64>, t: DMatrix<f64>, structure: Structure) -> Result<Self> {
        let p = t.nrows();
        if p == 0 {
            return Err(invalid("generator has no phases"));
        }
        for i in 0..p {
            for j in 0..p {
                let v = t[(i, j)];
                if !v.is_finite() {
                    return Err(invalid(format!("T[{i}][{j}] is not finite")));
                }
                if i == j && v >= 0.0 {
                    return Err(invalid(format!("diagonal T[{i}][{i}] = {v} must be negative")));
                }
                if i != j && v < -RATE_TOL {
                    return Err(invalid(format!("off-diagonal T[{i}][{j}] = {v} is negative")));
                }
            }
        }
        let mut exit = DVector::zeros(p);
        for i in 0..p {
            // tolerances are relative to the row's own rate scale
            let scale = -t[(i, i)];
            let row: f64 = t.row(i).sum();
            if row > RATE_TOL * scale {
                return Err(invalid(format!("row {i} of T sums to {row} > 0")));
            }
            exit[i] = if -row < RATE_TOL * scale { 0.0 } else { -row };
        }
        // every phase must reach absorption
        let mut absorbing: Vec<bool> = (0..p).map(|i| exit[i] > 0.0).collect();
        loop {
            let mut changed = false;
            for i in 0..p {
                if !absorbing[i] && (0..p).any(|j| j != i && t[(i, j)] > 0.0 && absorbing[j]) {
                    absorbing[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if let Some(i) = absorbing.iter().position(|a| !a) {
            return Err(invalid(format!(
                "phase {i} cannot reach absorption, so T is singular"
            )));
        }
        let decay = dominant_eigenvalue(&t, &structure);
        Ok(PhGenerator {
            pi,
            t,
            exit,
            structure,
            decay,
        })
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    pub fn sub_intensity(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn exit(&self) -> &DVector<f64> {
        &self.exit
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// The same (π, T) with the structure tag dropped, forcing generic
    /// matrix evaluation.
    pub fn as_general(&self) -> PhGenerator {
        PhGenerator {
            structure: Structure::General,
            ..self.clone()
        }
    }

    /// Largest real part among the eigenvalues of T.
    pub fn dominant_eigenvalue(&self) -> f64 {
        self.decay
    }

    /// Density π e^{Tx} t.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.structure {
            Structure::Erlang { p, lambda } => erlang_pdf(*p, *lambda, x),
            Structure::MixtureErlang { theta, p, lambda } => theta
                .iter()
                .zip(p)
                .zip(lambda)
                .map(|((th, pk), lk)| th * erlang_pdf(*pk, *lk, x))
                .sum(),
            Structure::Coxian { lambda } => {
                coxian_combination(self.pi.as_slice(), lambda, |l| (-l * x).exp(), true)
            }
            Structure::General => {
                let e = (&self.t * x).exp();
                (self.pi.transpose() * e * &self.exit)[(0, 0)].max(0.0)
            }
        }
    }

    /// Survival π e^{Tx} e.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let s = match &self.structure {
            Structure::Erlang { p, lambda } => erlang_survival(*p, *lambda, x),
            Structure::MixtureErlang { theta, p, lambda } => theta
                .iter()
                .zip(p)
                .zip(lambda)
                .map(|((th, pk), lk)| th * erlang_survival(*pk, *lk, x))
                .sum(),
            Structure::Coxian { lambda } => {
                coxian_combination(self.pi.as_slice(), lambda, |l| (-l * x).exp(), false)
            }
            Structure::General => {
                let e = (&self.t * x).exp();
                (self.pi.transpose() * e).sum()
            }
        };
        s.clamp(0.0, 1.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            1.0 - self.survival(x)
        }
    }

    /// ln of the density, accurate far in the tail where the density itself
    /// underflows.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        match &self.structure {
            Structure::Erlang { p, lambda } => erlang_ln_pdf(*p, *lambda, x),
            Structure::MixtureErlang { theta, p, lambda } => log_sum_exp(
                theta
                    .iter()
                    .zip(p)
                    .zip(lambda)
                    .filter(|((th, _), _)| **th > 0.0)
                    .map(|((th, pk), lk)| th.ln() + erlang_ln_pdf(*pk, *lk, x)),
            ),
            _ => {
                // e^{Tx} = e^{ηx} e^{(T−ηI)x} keeps the matrix factor bounded
                let eta = self.decay;
                let shifted = &self.t - DMatrix::identity(self.dim(), self.dim()) * eta;
                let v = if let Structure::Coxian { lambda } = &self.structure {
                    coxian_combination(self.pi.as_slice(), lambda, |l| (-(l + eta) * x).exp(), true)
                } else {
                    let e = (shifted * x).exp();
                    (self.pi.transpose() * e * &self.exit)[(0, 0)]
                };
                if v > 0.0 {
                    eta * x + v.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// E[τ^a] = Γ(a+1) π (−T)^{−a} e.
    pub fn frac_moment(&self, a: f64) -> Result<f64> {
        if !(a.is_finite() && a > 0.0) {
            return Err(MmlError::InvalidParameter(format!(
                "moment order {a} must be positive"
            )));
        }
        match &self.structure {
            Structure::Erlang { p, lambda } => Ok(erlang_moment(*p, *lambda, a)),
            Structure::MixtureErlang { theta, p, lambda } => Ok(theta
                .iter()
                .zip(p)
                .zip(lambda)
                .map(|((th, pk), lk)| th * erlang_moment(*pk, *lk, a))
                .sum()),
            _ => Ok(gamma(a + 1.0) * self.neg_power_sum(a)?),
        }
    }

    /// π (−T)^{−a} e.
    pub(crate) fn neg_power_sum(&self, a: f64) -> Result<f64> {
        let m = -&self.t;
        let pw = matrix_neg_power(&m, a)?;
        let v = (self.pi.transpose() * pw).sum();
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(MmlError::eval(
                Regime::Spectral,
                format!("matrix power gave non-positive moment {v}"),
            ))
        }
    }

    /// One absorption time of the underlying Markov jump process.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p = self.dim();
        let mut state = pick(rng, self.pi.as_slice());
        let mut time = 0.0;
        loop {
            let rate = -self.t[(state, state)];
            let hold: f64 = Exp1.sample(rng);
            time += hold / rate;
            // next phase, or p for absorption
            let u: f64 = rng.random::<f64>() * rate;
            let mut acc = 0.0;
            let mut next = p;
            for j in 0..p {
                if j != state {
                    acc += self.t[(state, j)];
                    if u < acc {
                        next = j;
                        break;
                    }
                }
            }
            if next == p {
                return time;
            }
            state = next;
        }
    }

    pub fn to_json(&self) -> Value {
        let t: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| self.t.row(i).iter().copied().collect())
            .collect();
        let mut doc = json!({
            "structure": self.structure.name(),
            "pi": self.pi.as_slice(),
            "T": t,
        });
        match &self.structure {
            Structure::Erlang { p, lambda } => {
                doc["p"] = json!(p);
                doc["lambda"] = json!(lambda);
            }
            Structure::MixtureErlang { theta, p, lambda } => {
                doc["theta"] = json!(theta);
                doc["p"] = json!(p);
                doc["lambda"] = json!(lambda);
            }
            Structure::Coxian { lambda } => doc["lambda"] = json!(lambda),
            Structure::General => {}
        }
        doc
    }

    /// Reads a generator document. `path` prefixes field names in errors.
    pub fn from_json(doc: &Value, path: &str) -> Result<Self> {
        let obj = doc
            .as_object()
            .ok_or_else(|| doc_err(path, "expected an object"))?;
        let structure = obj
            .get("structure")
            .and_then(Value::as_str)
            .ok_or_else(|| doc_err(&field(path, "structure"), "expected a string"))?;
        let gen = match structure {
            "erlang" => make_erlang(
                read_usize(obj.get("p"), &field(path, "p"))?,
                read_f64(obj.get("lambda"), &field(path, "lambda"))?,
            ),
            "mixture_erlang" => make_mixture_erlang(
                &read_vec(obj.get("theta"), &field(path, "theta"))?,
                &read_usize_vec(obj.get("p"), &field(path, "p"))?,
                &read_vec(obj.get("lambda"), &field(path, "lambda"))?,
            ),
            "coxian" => make_coxian(
                &read_vec(obj.get("pi"), &field(path, "pi"))?,
                &read_vec(obj.get("lambda"), &field(path, "lambda"))?,
            ),
            "general" => {
                let pi = read_vec(obj.get("pi"), &field(path, "pi"))?;
                let t = read_matrix(obj.get("T"), &field(path, "T"))?;
                make_general(&pi, &t)
            }
            other => {
                return Err(doc_err(
                    &field(path, "structure"),
                    &format!("unknown structure {other:?}"),
                ))
            }
        }
        .map_err(|e| doc_err(path, &e.to_string()))?;

        // explicit pi / T entries must agree with the structured parameters
        if let Some(v) = obj.get("pi") {
            let pi = read_vec(Some(v), &field(path, "pi"))?;
            if pi.len() != gen.dim()
                || pi.iter().zip(gen.pi.iter()).any(|(a, b)| (a - b).abs() > RATE_TOL)
            {
                return Err(doc_err(&field(path, "pi"), "inconsistent with the structure parameters"));
            }
        }
        if let Some(v) = obj.get("T") {
            let t = read_matrix(Some(v), &field(path, "T"))?;
            if t.shape() != gen.t.shape()
                || t.iter().zip(gen.t.iter()).any(|(a, b)| (a - b).abs() > RATE_TOL)
            {
                return Err(doc_err(&field(path, "T"), "inconsistent with the structure parameters"));
            }
        }
        Ok(gen)
    }
}

impl serde::Serialize for PhGenerator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for PhGenerator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        PhGenerator::from_json(&v, "").map_err(serde::de::Error::custom)
    }
}

pub(crate) fn field(path: &str, name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{path}.{name}")
    }
}

pub(crate) fn doc_err(path: &str, msg: &str) -> MmlError {
    let at = if path.is_empty() { "<root>" } else { path };
    MmlError::Document(format!("{at}: {msg}"))
}

pub(crate) fn read_f64(v: Option<&Value>, path: &str) -> Result<f64> {
    v.and_then(Value::as_f64)
        .ok_or_else(|| doc_err(path, "expected a number"))
}

fn read_usize(v: Option<&Value>, path: &str) -> Result<usize> {
    v.and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| doc_err(path, "expected a positive integer"))
}

pub(crate) fn read_vec(v: Option<&Value>, path: &str) -> Result<Vec<f64>> {
    let arr = v
        .and_then(Value::as_array)
        .ok_or_else(|| doc_err(path, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| x.as_f64().ok_or_else(|| doc_err(&format!("{path}[{i}]"), "expected a number")))
        .collect()
}

fn read_usize_vec(v: Option<&Value>, path: &str) -> Result<Vec<usize>> {
    let arr = v
        .and_then(Value::as_array)
        .ok_or_else(|| doc_err(path, "expected an array of integers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_u64()
                .map(|u| u as usize)
                .ok_or_else(|| doc_err(&format!("{path}[{i}]"), "expected a positive integer"))
        })
        .collect()
}

pub(crate) fn read_matrix(v: Option<&Value>, path: &str) -> Result<DMatrix<f64>> {
    let rows = v
        .and_then(Value::as_array)
        .ok_or_else(|| doc_err(path, "expected an array of rows"))?;
    let n = rows.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        let row = read_vec(Some(r), &format!("{path}[{i}]"))?;
        if row.len() != n {
            return Err(doc_err(
                &format!("{path}[{i}]"),
                &format!("expected {n} entries, found {}", row.len()),
            ));
        }
        for (j, x) in row.into_iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    Ok(m)
}

pub(crate) fn pick<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn dominant_eigenvalue(t: &DMatrix<f64>, structure: &Structure) -> f64 {
    match structure {
        Structure::Erlang { lambda, .. } => -lambda,
        Structure::MixtureErlang { lambda, .. } | Structure::Coxian { lambda } => {
            -lambda.iter().copied().fold(f64::INFINITY, f64::min)
        }
        Structure::General => {
            let ev = t.complex_eigenvalues();
            let eta = ev.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
            if eta.is_finite() && eta < 0.0 {
                eta
            } else {
                t.diagonal().max()
            }
        }
    }
}

fn erlang_ln_pdf(p: usize, lambda: f64, x: f64) -> f64 {
    let pf = p as f64;
    if x == 0.0 {
        return if p == 1 { lambda.ln() } else { f64::NEG_INFINITY };
    }
    pf * lambda.ln() + (pf - 1.0) * x.ln() - lambda * x - ln_gamma(pf)
}

fn erlang_pdf(p: usize, lambda: f64, x: f64) -> f64 {
    erlang_ln_pdf(p, lambda, x).exp()
}

/// e^{−λx} Σ_{k<p} (λx)^k / k!
fn erlang_survival(p: usize, lambda: f64, x: f64) -> f64 {
    let y = lambda * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..p {
        term *= y / k as f64;
        sum += term;
    }
    (-y + sum.ln()).exp()
}

fn erlang_moment(p: usize, lambda: f64, a: f64) -> f64 {
    let pf = p as f64;
    (ln_gamma(pf + a) - ln_gamma(pf)).exp() * lambda.powf(-a)
}

/// Σ_i πᵢ Σ_{m≥i} wᵢₘ g(λₘ) for the Coxian chain. With `density` the
/// weights are Π_{k≥i} λₖ / Π_{n≠m} (λₙ − λₘ) (divided differences of g),
/// otherwise the survival weights Π_{n≠m} λₙ / (λₙ − λₘ).
pub(crate) fn coxian_combination<G: Fn(f64) -> f64>(
    pi: &[f64],
    lambda: &[f64],
    g: G,
    density: bool,
) -> f64 {
    let p = lambda.len();
    let gv: Vec<f64> = lambda.iter().map(|&l| g(l)).collect();
    let mut total = 0.0;
    for i in 0..p {
        if pi[i] == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for m in i..p {
            let mut w = 1.0;
            for n in i..p {
                if n != m {
                    if density {
                        w /= lambda[n] - lambda[m];
                    } else {
                        w *= lambda[n] / (lambda[n] - lambda[m]);
                    }
                }
            }
            inner += w * gv[m];
        }
        if density {
            inner *= lambda[i..].iter().product::<f64>();
        }
        total += pi[i] * inner;
    }
    total
}

pub(crate) fn log_sum_exp<I: Iterator<Item = f64>>(it: I) -> f64 {
    let v: Vec<f64> = it.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
