//! Matrix Mittag-Leffler and power matrix Mittag-Leffler distributions.
//!
//! Heavy-tailed laws built from a phase-type generator (π, T) and a tail
//! index α: evaluation, exact sampling, semi-Markov simulation, maximum
//! likelihood fitting and tail diagnostics.

pub mod distribution;
pub mod error;
pub mod fitting;
pub mod gof;
pub mod ml_special;
pub mod phase_type;
pub mod sampling;
pub mod semi_markov;
pub mod tail_tools;

pub use distribution::{MmlDist, PmmlDist};
pub use error::{MmlError, Regime, Result};
