//! Error taxonomy shared by all solver layers.
//!
//! The variants map onto the CLI exit-code contract: usage problems are
//! caught before any `Error` is produced, `RegimeRejected` maps to exit 3,
//! `NonConvergence`/`Divergence` to exit 4, everything else is a plain
//! failure.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Grid construction rejected the requested dimensions.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Two objects living on structurally different grids were combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An argument violated a documented domain restriction.
    #[error("domain error: {0}")]
    Domain(String),

    /// A functional evaluation produced a non-finite value.
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    /// The grid cannot represent the requested state or dilation.
    #[error("resolution loss: {0}")]
    Resolution(String),

    /// Ground-state search refused: the coupling admits no bound states.
    /// In the stable regime B(u) > 0 for every nonzero state, so the
    /// constrained minimization problem has no nontrivial target.
    #[error(
        "coupling (λ1={lambda1}, λ2={lambda2}) is {class}: \
         the interaction functional is sign-definite and no nontrivial \
         bound state exists (d+={d_plus}, d-={d_minus})"
    )]
    RegimeRejected {
        lambda1: f64,
        lambda2: f64,
        class: &'static str,
        d_plus: f64,
        d_minus: f64,
    },

    /// The flow exhausted its iteration budget without meeting tolerances.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The quintic term blew past the configured cap: the iterate left the
    /// basin the projected flow can control.
    #[error("divergence detected at iteration {iteration}: C(u) = {sextic:.3e} exceeds cap {cap:.3e}")]
    Divergence {
        iteration: usize,
        sextic: f64,
        cap: f64,
    },

    /// Quadrature failed to reach its target accuracy.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// Cross-checked constants disagreed beyond tolerance.
    #[error("consistency check failed: {0}")]
    Inconsistent(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}
