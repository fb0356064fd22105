//! Functions of small dense matrices, E_{α,β}(A) in particular.
//!
//! The matrix is first split into independent diagonal blocks. Each block is
//! handled by the cheapest exact route available: scalar evaluation for 1×1
//! blocks, a finite nilpotent expansion for triangular blocks with constant
//! diagonal, and an eigenbasis built from a complex Schur form otherwise. A
//! caller-supplied series is the last resort when the eigenbasis is badly
//! conditioned.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64 as C64;

use super::gamma::rgamma;
use super::scalar::{derivs, MlParams};
use crate::error::{MmlError, Regime, Result};

pub const MAX_DIMENSION: usize = 64;
/// Largest accepted condition number of a computed eigenbasis.
pub const BASIS_CONDITION_LIMIT: f64 = 1e8;
/// Largest imaginary residue tolerated when a real matrix function is
/// assembled from complex eigen-data, relative to the result's magnitude.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-10;

const SERIES_CAP: usize = 5000;

/// Eigen-structure A = P J P⁻¹ with J block diagonal and each block a Jordan
/// block of the listed size. Only diagonalizable matrices and Jordan-like
/// bidiagonal blocks (constant diagonal, nonzero superdiagonal) are
/// decomposed; a numerical Jordan form of an arbitrary matrix is never
/// attempted.
#[derive(Debug, Clone)]
pub struct SpectralForm {
    pub eigenvalues: Vec<C64>,
    pub block_sizes: Vec<usize>,
    pub basis: DMatrix<C64>,
    pub basis_inv: DMatrix<C64>,
}

impl SpectralForm {
    pub fn compute(a: &DMatrix<f64>) -> Result<Self> {
        check_square(a)?;
        let n = a.nrows();
        let mut eigenvalues = Vec::new();
        let mut block_sizes = Vec::new();
        let mut basis = DMatrix::<C64>::zeros(n, n);
        let mut basis_inv = DMatrix::<C64>::zeros(n, n);
        for (off, size) in split_blocks(a) {
            let block = a.view((off, off), (size, size)).clone_owned();
            if let Some(scales) = jordan_scales(&block) {
                eigenvalues.push(C64::new(block[(0, 0)], 0.0));
                block_sizes.push(size);
                for (i, s) in scales.iter().enumerate() {
                    basis[(off + i, off + i)] = C64::new(*s, 0.0);
                    basis_inv[(off + i, off + i)] = C64::new(1.0 / s, 0.0);
                }
            } else {
                let eig = eigenbasis(&block).ok_or_else(|| {
                    MmlError::eval(Regime::Spectral, "eigenbasis is ill-conditioned")
                })?;
                for (i, lambda) in eig.values.iter().enumerate() {
                    eigenvalues.push(*lambda);
                    block_sizes.push(1);
                    for j in 0..size {
                        basis[(off + j, off + i)] = eig.vectors[(j, i)];
                        basis_inv[(off + i, off + j)] = eig.inverse[(i, j)];
                    }
                }
            }
        }
        Ok(SpectralForm {
            eigenvalues,
            block_sizes,
            basis,
            basis_inv,
        })
    }

    pub fn dimension(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// P J P⁻¹.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let n = self.dimension();
        let mut j = DMatrix::<C64>::zeros(n, n);
        let mut off = 0;
        for (lambda, &size) in self.eigenvalues.iter().zip(&self.block_sizes) {
            for i in 0..size {
                j[(off + i, off + i)] = *lambda;
                if i + 1 < size {
                    j[(off + i, off + i + 1)] = C64::new(1.0, 0.0);
                }
            }
            off += size;
        }
        &self.basis * j * &self.basis_inv
    }
}

/// Diagonal scaling P with P J P⁻¹ = A for an upper bidiagonal block with
/// constant diagonal and nonzero superdiagonal s: P_{i+1} = P_i / s_i.
fn jordan_scales(b: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = b.nrows();
    if n < 2 {
        return None;
    }
    let d = b[(0, 0)];
    for i in 0..n {
        for j in 0..n {
            let v = b[(i, j)];
            let ok = if i == j {
                v == d
            } else if j == i + 1 {
                v != 0.0
            } else {
                v == 0.0
            };
            if !ok {
                return None;
            }
        }
    }
    let mut scales = vec![1.0];
    for i in 0..n - 1 {
        let next = scales[i] / b[(i, i + 1)];
        if !next.is_finite() || next == 0.0 {
            return None;
        }
        scales.push(next);
    }
    Some(scales)
}

fn check_square(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(MmlError::InvalidParameter(format!(
            "matrix is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() == 0 || a.nrows() > MAX_DIMENSION {
        return Err(MmlError::InvalidParameter(format!(
            "matrix dimension {} outside 1..={MAX_DIMENSION}",
            a.nrows()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(MmlError::InvalidParameter(
            "matrix has non-finite entries".into(),
        ));
    }
    Ok(())
}

/// Finest partition of 0..n into contiguous index ranges such that all
/// entries coupling different ranges vanish.
pub(crate) fn split_blocks(a: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = a.nrows();
    let mut blocks = Vec::new();
    let mut start = 0;
    let mut reach = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j && (a[(i, j)] != 0.0 || a[(j, i)] != 0.0) && j > reach {
                reach = j;
            }
        }
        reach = reach.max(i);
        if reach == i {
            blocks.push((start, i + 1 - start));
            start = i + 1;
        }
    }
    blocks
}

struct Eigen {
    values: Vec<C64>,
    vectors: DMatrix<C64>,
    inverse: DMatrix<C64>,
}

fn is_upper_triangular(b: &DMatrix<f64>) -> bool {
    (0..b.nrows()).all(|i| (0..i).all(|j| b[(i, j)] == 0.0))
}

/// Eigenvalues and a well-conditioned eigenbasis, or None.
fn eigenbasis(b: &DMatrix<f64>) -> Option<Eigen> {
    let n = b.nrows();
    let cb = b.map(|v| C64::new(v, 0.0));
    let (q, t) = if is_upper_triangular(b) {
        (DMatrix::<C64>::identity(n, n), cb)
    } else {
        Schur::try_new(cb, f64::EPSILON, 10_000)?.unpack()
    };
    let scale = t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let smin = scale * f64::EPSILON;
    let mut y = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        let lambda = t[(i, i)];
        y[(i, i)] = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut s = C64::new(0.0, 0.0);
            for l in j + 1..=i {
                s += t[(j, l)] * y[(l, i)];
            }
            let mut den = t[(j, j)] - lambda;
            if den.norm() < smin {
                den = C64::new(smin, 0.0);
            }
            y[(j, i)] = -s / den;
        }
        let norm = y.column(i).norm();
        y.column_mut(i).unscale_mut(norm);
    }
    let v = q * y;
    let inv = v.clone().try_inverse()?;
    let cond = v.norm() * inv.norm();
    if !cond.is_finite() || cond > BASIS_CONDITION_LIMIT {
        return None;
    }
    Some(Eigen {
        values: (0..n).map(|i| t[(i, i)]).collect(),
        vectors: v,
        inverse: inv,
    })
}

fn constant_diagonal(b: &DMatrix<f64>) -> bool {
    let d = b[(0, 0)];
    (0..b.nrows()).all(|i| b[(i, i)] == d)
}

/// Scalar function supplying derivatives 0..=k at a point.
pub(crate) type DerivFn<'a> = dyn Fn(C64, usize) -> Result<Vec<C64>> + 'a;
/// Whole-block fallback used when no exact route applies.
pub(crate) type FallbackFn<'a> = dyn Fn(&DMatrix<f64>) -> Result<DMatrix<f64>> + 'a;

/// f(A) for a real square matrix A with a real-valued function f.
pub(crate) fn matrix_function(
    a: &DMatrix<f64>,
    f: &DerivFn<'_>,
    fallback: &FallbackFn<'_>,
) -> Result<DMatrix<f64>> {
    check_square(a)?;
    let n = a.nrows();
    let mut out = DMatrix::<f64>::zeros(n, n);
    for (off, size) in split_blocks(a) {
        let block = a.view((off, off), (size, size)).clone_owned();
        let fb = block_function(&block, f, fallback)?;
        out.view_mut((off, off), (size, size)).copy_from(&fb);
    }
    Ok(out)
}

fn block_function(
    b: &DMatrix<f64>,
    f: &DerivFn<'_>,
    fallback: &FallbackFn<'_>,
) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    if n == 1 {
        let v = f(C64::new(b[(0, 0)], 0.0), 0)?[0];
        return Ok(DMatrix::from_element(1, 1, v.re));
    }
    if constant_diagonal(b) {
        if is_upper_triangular(b) {
            return nilpotent(b, f);
        }
        let bt = b.transpose();
        if is_upper_triangular(&bt) {
            return Ok(nilpotent(&bt, f)?.transpose());
        }
    }
    match eigenbasis(b) {
        Some(eig) => {
            let mut scaled = eig.vectors.clone();
            for (i, lambda) in eig.values.iter().enumerate() {
                let fv = f(*lambda, 0)?[0];
                for r in 0..n {
                    scaled[(r, i)] *= fv;
                }
            }
            let full = scaled * eig.inverse;
            let re = full.map(|v| v.re);
            let im_max = full.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            let re_max = re.amax();
            if im_max <= IMAG_RESIDUE_LIMIT * re_max.max(f64::MIN_POSITIVE) {
                Ok(re)
            } else {
                fallback(b).map_err(|e| {
                    MmlError::eval(
                        Regime::Spectral,
                        format!("imaginary residue {im_max:e} too large; fallback failed: {e}"),
                    )
                })
            }
        }
        None => fallback(b).map_err(|e| {
            MmlError::eval(
                Regime::Spectral,
                format!("eigenbasis ill-conditioned; fallback failed: {e}"),
            )
        }),
    }
}

/// Σ_k f^{(k)}(d) N^k / k! for an upper triangular block d·I + N.
fn nilpotent(b: &DMatrix<f64>, f: &DerivFn<'_>) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    let d = b[(0, 0)];
    let mut nil = b.clone();
    for i in 0..n {
        nil[(i, i)] = 0.0;
    }
    let fd = f(C64::new(d, 0.0), n - 1)?;
    let mut out = DMatrix::<f64>::identity(n, n) * fd[0].re;
    let mut pw = DMatrix::<f64>::identity(n, n);
    let mut fact = 1.0;
    for (k, fk) in fd.iter().enumerate().skip(1) {
        pw = &pw * &nil;
        fact *= k as f64;
        out += &pw * (fk.re / fact);
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(MmlError::eval(
            Regime::Nilpotent,
            "non-finite nilpotent expansion",
        ));
    }
    Ok(out)
}

/// E_{α,β}(A).
pub fn ml_matrix(params: &MlParams, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    params.validate()?;
    ml_matrix_unchecked(params.alpha, params.beta, a, params.accuracy_target)
}

pub(crate) fn ml_matrix_unchecked(
    alpha: f64,
    beta: f64,
    a: &DMatrix<f64>,
    tol: f64,
) -> Result<DMatrix<f64>> {
    let f = |z: C64, k: usize| derivs(alpha, beta, z, k, tol, None);
    let fallback = |b: &DMatrix<f64>| series_unchecked(alpha, beta, b, tol);
    matrix_function(a, &f, &fallback)
}

/// Truncated Taylor series Σ_k A^k / Γ(αk + β) with adaptive truncation.
/// Fails when cancellation among the terms would destroy the accuracy
/// target (or 1e-8 if that is looser).
pub fn ml_matrix_series(params: &MlParams, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    params.validate()?;
    check_square(a)?;
    series_unchecked(params.alpha, params.beta, a, params.accuracy_target)
}

fn series_unchecked(alpha: f64, beta: f64, a: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let tol = tol.max(1e-8);
    let mut sum = DMatrix::<f64>::identity(n, n) * rgamma(beta);
    let mut pw = DMatrix::<f64>::identity(n, n);
    let mut max_term = sum.norm();
    let mut quiet = 0;
    let n_min = (2.0 / alpha).ceil() as usize + 2;
    for k in 1..SERIES_CAP {
        pw = &pw * a;
        let term = &pw * rgamma(alpha * k as f64 + beta);
        let mag = term.norm();
        if !mag.is_finite() || pw.norm() > 1e300 {
            break;
        }
        sum += &term;
        max_term = max_term.max(mag);
        if k >= n_min && mag <= 1e-17 * sum.norm().max(f64::MIN_POSITIVE) {
            quiet += 1;
            if quiet >= 3 {
                let norm = sum.norm();
                if max_term * f64::EPSILON * 10.0 > tol * norm {
                    return Err(MmlError::eval(
                        Regime::MatrixSeries,
                        format!(
                            "cancellation: largest term {max_term:e} against result norm {norm:e}"
                        ),
                    ));
                }
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Err(MmlError::eval(
        Regime::MatrixSeries,
        "series did not converge".to_string(),
    ))
}

/// M^{-a} for a matrix whose eigenvalues have positive real part, using the
/// principal branch.
pub fn matrix_neg_power(m: &DMatrix<f64>, a: f64) -> Result<DMatrix<f64>> {
    let f = move |z: C64, k: usize| -> Result<Vec<C64>> {
        // d^k/dz^k z^{-a} = (-a)(-a-1)...(-a-k+1) z^{-a-k}
        let mut out = Vec::with_capacity(k + 1);
        let mut coef = 1.0;
        for j in 0..=k {
            if j > 0 {
                coef *= -a - (j as f64 - 1.0);
            }
            out.push(coef * (-(a + j as f64) * z.ln()).exp());
        }
        Ok(out)
    };
    let fallback = move |b: &DMatrix<f64>| neg_power_series(b, a);
    matrix_function(m, &f, &fallback)
}

/// c^{-a} Σ_k (a)_k/k! (I − M/c)^k with c the largest diagonal entry.
fn neg_power_series(m: &DMatrix<f64>, a: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let c = m.diagonal().max();
    if !(c > 0.0) {
        return Err(MmlError::eval(
            Regime::MatrixSeries,
            "power series needs a positive diagonal",
        ));
    }
    let r = DMatrix::<f64>::identity(n, n) - m / c;
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut quiet = 0;
    for k in 1..100 * SERIES_CAP {
        term = &term * &r * ((a + k as f64 - 1.0) / k as f64);
        sum += &term;
        if term.norm() <= 1e-17 * sum.norm() {
            quiet += 1;
            if quiet >= 3 {
                return Ok(sum * c.powf(-a));
            }
        } else {
            quiet = 0;
        }
        if !term.norm().is_finite() {
            break;
        }
    }
    Err(MmlError::eval(
        Regime::MatrixSeries,
        "inverse power series did not converge",
    ))
}
