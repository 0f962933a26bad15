//! Numerical classification of the C*-algebras of generalized ax+b solvable
//! Lie groups `G_D = R ⋉_D V`, together with a discretized operator laboratory
//! for the product-convolution constructions that witness non-quasidiagonality.
//!
//! The crate is organized around the pipeline
//!
//! ```text
//! spectra  ──►  lyapunov  ──►  flows  ──►  classifier
//!                                              │
//!                         operators  ◄──  (independent laboratory)
//!                                              │
//!                                             cli
//! ```
//!
//! * [`spectra`] — eigenvalues with multiplicity, Jordan–Chevalley splitting,
//!   and dense matrix exponentials.
//! * [`lyapunov`] — Lyapunov space decomposition and the fast/slow filtrations
//!   that govern exponential growth rates of `exp(tD)v`.
//! * [`flows`] — the flow `α_D(v,t) = exp(tD)v` on the one-point
//!   compactification: attractor–repeller detection, omega-limit estimates,
//!   and a trajectory-based brute-force oracle.
//! * [`classifier`] — regularity reports (nilpotent, exponential, strongly
//!   quasidiagonal, quasidiagonal, AF-embeddable), the isomorphism-class
//!   invariant `(n0, {n+, n-})`, class counting, and a catalog of benchmark
//!   groups.
//! * [`operators`] — discretized realizations of the convolution operator `T`,
//!   the unitary `1 - 2T`, and the isometry candidates `1 - 2 M_g T`, with
//!   numerical unitarity, injectivity, index, compactness, and covariance
//!   experiments.
//! * [`cli`] — the `qdlie` command surface (JSON reports, CSV data).
//!
//! Run `cargo run --example <name>` for a tour; each major capability has a
//! runnable example under `examples/`.

pub mod classifier;
pub mod cli;
pub mod flows;
pub mod lyapunov;
pub mod operators;
pub mod spectra;

use thiserror::Error;

/// Crate-wide error type.
///
/// Tolerance-boundary situations are never errors: they surface as flags on
/// the returned reports. Errors are reserved for inputs that violate a
/// documented precondition.
#[derive(Debug, Error)]
pub enum Error {
    /// Input fails a structural invariant (non-square, non-finite, empty...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A documented precondition of the called operation does not hold.
    /// Carries the name of the failed hypothesis.
    #[error("precondition failed: {hypothesis}")]
    Precondition { hypothesis: String },

    /// The requested computation would overflow f64.
    #[error("overflow: {what} exceeds the representable threshold {threshold:e}")]
    Overflow { what: String, threshold: f64 },

    /// A matrix is not a member of the admissible class for the operation
    /// (semisimple, no nonzero purely imaginary eigenvalues).
    #[error("not in End0(V): {hypothesis}")]
    NotInEnd0 { hypothesis: String },

    /// Structure constants describe a non-solvable algebra, which is outside
    /// the supported class.
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    /// Unknown catalog name; lists the valid ones.
    #[error("unknown catalog name {name:?}; valid names: {valid}")]
    UnknownName { name: String, valid: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
