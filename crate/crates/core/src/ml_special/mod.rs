//! Mittag-Leffler functions: scalar values, derivatives and matrix arguments.
//!
//! The scalar evaluator switches between a power series near the origin, an
//! algebraic expansion far out in the left half plane and a contour integral
//! everywhere else. Derivatives share the same machinery.

mod contour;
pub mod gamma;
mod matrix;
mod scalar;

pub use matrix::{
    matrix_neg_power, ml_matrix, ml_matrix_series, SpectralForm, BASIS_CONDITION_LIMIT,
    IMAG_RESIDUE_LIMIT, MAX_DIMENSION,
};
pub use scalar::{
    ml_deriv, ml_derivs, ml_eval, ml_eval_in, ml_regime, recursion_coefficients, MlParams,
    ASYMPTOTIC_RADIUS, DEFAULT_ACCURACY, MAX_DERIVATIVE, SERIES_RADIUS,
};

pub(crate) use matrix::ml_matrix_unchecked;
pub(crate) use scalar::derivs_real;
