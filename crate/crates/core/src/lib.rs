//! Finite-dimensional deformation calculus for cochain complexes.
//!
//! Given a truncated one-parameter family of differentials on a finite
//! graded complex, this crate decides whether the cohomology dimension in a
//! chosen degree jumps at the origin, by two independent routes:
//!
//! * obstruction calculus — the extension recursion through the Green
//!   operator and the obstruction maps on truncated complexes;
//! * a brute-force rank oracle sampling the parameter.
//!
//! The crate also ships Hodge decomposition for validated complexes, graded
//! Lie algebra models with the Kuranishi fixed-point recursion, and builders
//! for invariant nilmanifold fixtures.

pub mod dgla;
pub mod hodge;
pub mod jump;
pub mod linalg;
pub mod models;
pub mod oracle;

pub use dgla::{Dgla, MaurerCartanSeries};
pub use hodge::{GradedComplex, HodgeData};
pub use jump::{Extension, JumpVerdict, OperatorSeries};
pub use oracle::OracleReport;

/// Numerical thresholds shared by the whole pipeline.
///
/// All tolerances are relative: rank thresholds scale with the largest
/// singular value (or eigenvalue) of the matrix at hand, and obstruction
/// vanishing is measured against the size of the coefficient it sits in.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Relative kernel threshold for ranks and harmonic spaces.
    pub rank_tol: f64,
    /// Residual bound for Hodge identities and structural validation.
    pub hodge_tol: f64,
    /// Relative threshold below which an obstruction class counts as zero.
    pub obstruction_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            hodge_tol: 1e-9,
            obstruction_tol: 1e-8,
        }
    }
}
