//! Error taxonomy shared by the library and the command-line front end.
//!
//! Variants are grouped by how a caller should react: bad inputs
//! (`ParameterDomain`, `Validation`), not enough data to answer
//! (`InsufficientData`), a well-posed question whose numerical answer could
//! not be certified (`Fit`, `Truncation`, `TermBudget`, `Branch`), and a
//! mathematical precondition that the inputs fail (`Hypothesis`).

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter lies outside its admissible range.
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// A structured input (sequence, measure, window) fails its invariants.
    #[error("invalid input: {0}")]
    Validation(String),

    /// The requested quantity needs more realized data than is available.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A mathematical hypothesis of the requested computation fails.
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    /// A regression or estimation step could not produce a usable answer.
    #[error("fit failed: {0}")]
    Fit(String),

    /// An error-target truncation could not reach the requested bound.
    #[error(
        "truncation target {requested:.3e} unreachable: achieved {achieved:.3e} with {terms} terms"
    )]
    Truncation {
        /// Tail bound the caller asked for.
        requested: f64,
        /// Best rigorous bound attained before giving up.
        achieved: f64,
        /// Number of factors actually summed.
        terms: usize,
    },

    /// A cutoff policy demands more factors than the configured budget.
    #[error("policy needs {needed} terms, budget is {max_terms}")]
    TermBudget {
        /// Terms the policy resolves to.
        needed: usize,
        /// Hard cap in force.
        max_terms: usize,
    },

    /// The requested computation sits in an ill-conditioned branch boundary.
    #[error("ill-conditioned branch: {0}")]
    Branch(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
