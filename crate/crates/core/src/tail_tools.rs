//! Tail diagnostics: Hill curves, uniform QQ pairs and the exp/log data
//! transforms that move light-tailed data into the Pareto domain and back.

use crate::distribution::PmmlDist;
use crate::error::{MmlError, Result};

/// Largest argument accepted by [`exp_values`].
pub const EXP_LIMIT: f64 = 700.0;

/// A labelled vector of strictly positive, finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSeries {
    values: Vec<f64>,
    label: String,
}

impl DataSeries {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let bad: Vec<usize> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| !(v.is_finite() && **v > 0.0))
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            return Err(MmlError::InvalidData(format!(
                "non-positive or non-finite values at indices {bad:?}"
            )));
        }
        if values.is_empty() {
            return Err(MmlError::InvalidData("no observations".into()));
        }
        Ok(DataSeries {
            values,
            label: label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn sorted(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Hill estimates H_k for k = 1..n−1 from the k largest observations.
///
/// Logs are taken of ratios to the sample maximum, so rescaling the data by
/// a power of two leaves the curve bit-identical. Ties give H_k = 0.
pub fn hill_curve(data: &[f64]) -> Result<Vec<(usize, f64)>> {
    let n = data.len();
    if n < 3 {
        return Err(MmlError::InvalidData(format!(
            "Hill curve needs at least 3 observations, got {n}"
        )));
    }
    let xs = sorted(data);
    let top = xs[n - 1];
    let mut out = Vec::with_capacity(n - 1);
    let mut sum = 0.0;
    for k in 1..n {
        sum += (xs[n - k] / top).ln();
        let h = sum / k as f64 - (xs[n - k - 1] / top).ln();
        out.push((k, h.max(0.0)));
    }
    Ok(out)
}

/// Single Hill estimate at k.
pub fn hill_at(data: &[f64], k: usize) -> Result<f64> {
    let curve = hill_curve(data)?;
    curve
        .get(k.wrapping_sub(1))
        .map(|&(_, h)| h)
        .ok_or_else(|| MmlError::InvalidData(format!("k = {k} outside 1..{}", data.len() - 1)))
}

/// Elementwise exp(x) − 1. Arguments above [`EXP_LIMIT`] are reported
/// together by index.
pub fn exp_values(xs: &[f64]) -> Result<Vec<f64>> {
    let over: Vec<usize> = xs
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > EXP_LIMIT)
        .map(|(i, _)| i)
        .collect();
    if !over.is_empty() {
        return Err(MmlError::Overflow { indices: over });
    }
    Ok(xs.iter().map(|x| x.exp_m1()).collect())
}

/// Elementwise log(1 + y), the inverse of [`exp_values`].
pub fn log_values(ys: &[f64]) -> Vec<f64> {
    ys.iter().map(|y| y.ln_1p()).collect()
}

/// Yᵢ = exp(Xᵢ) − 1.
pub fn exp_transform(data: &DataSeries) -> Result<DataSeries> {
    DataSeries::new(exp_values(&data.values)?, format!("exp({})-1", data.label))
}

/// Xᵢ = log(1 + Yᵢ), the inverse of [`exp_transform`].
pub fn log_back_transform(data: &DataSeries) -> Result<DataSeries> {
    DataSeries::new(log_values(&data.values), format!("log(1+{})", data.label))
}

/// Pairs (i/(n+1), F(x₍ᵢ₎)) for the sorted sample.
pub fn qq_uniform(model: &PmmlDist, data: &[f64]) -> Result<Vec<(f64, f64)>> {
    let xs = sorted(data);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| Ok(((i + 1) as f64 / (n + 1.0), model.cdf(x)?)))
        .collect()
}

/// `k,hill` CSV text.
pub fn hill_csv(curve: &[(usize, f64)]) -> String {
    let mut s = String::from("k,hill\n");
    for (k, h) in curve {
        s.push_str(&format!("{k},{h:?}\n"));
    }
    s
}

/// `theoretical,empirical` CSV text.
pub fn qq_csv(pairs: &[(f64, f64)]) -> String {
    let mut s = String::from("theoretical,empirical\n");
    for (a, b) in pairs {
        s.push_str(&format!("{a:?},{b:?}\n"));
    }
    s
}
