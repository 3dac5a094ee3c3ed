//! Concentration inequalities for martingales and for weighted averages of
//! many simultaneously evolving martingales.
//!
//! The crate is organised bottom-up:
//!
//! - [`scalar`]: binary kl divergence, its numerical inversion, Pinsker and
//!   refined relaxations, and KL between weight vectors.
//! - [`individual`]: kl, Hoeffding-Azuma and Bernstein bounds for a single
//!   martingale, together with the λ-grid shared with the PAC-Bayesian bounds.
//! - [`pac_bayes`]: PAC-Bayes-kl, PAC-Bayes-Hoeffding-Azuma and
//!   PAC-Bayes-Bernstein bounds over a finite hypothesis set.
//! - [`simulation`]: seeded generators and Monte-Carlo coverage experiments.
//! - [`oracle`]: brute-force verifiers (exact binomial sums, enumeration of
//!   `{0,1}^n`, moment generating function checks).

mod error;
mod numeric;

pub mod individual;
pub mod oracle;
pub mod pac_bayes;
pub mod scalar;
pub mod simulation;

pub use error::{Error, Result};
pub use individual::{BoundResult, Branch, Interval, LambdaGrid, RangeSeq};
pub use pac_bayes::{HypothesisSummary, PacBayesResult};
pub use scalar::{DiscreteDistribution, KlValue, Prob};

/// `e - 2`, the constant of the quadratic bound `e^x <= 1 + x + (e-2)x^2` for `x <= 1`.
pub const E_MINUS_2: f64 = std::f64::consts::E - 2.0;
