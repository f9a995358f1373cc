//! Sparse symmetric linear algebra used by the parameterization and shell solvers.
//!
//! Everything here is generic over [`Scalar`](crate::Scalar). Systems are assembled into
//! [`CsrMatrix`] through a fixed [`SparsityPattern`], reordered with reverse Cuthill-McKee and
//! factored with an envelope (skyline) Cholesky. A Jacobi-preconditioned conjugate gradient is
//! available for systems above [`SolverOptions::direct_max_dim`].

mod cg;
pub mod dense;
mod ordering;
mod skyline;
mod sparse;

pub use cg::{conjugate_gradient, CgOutcome};
pub use ordering::{envelope_size, reverse_cuthill_mckee};
pub use skyline::{SkylineCholesky, SkylineSymbolic};
pub use sparse::{CsrMatrix, SparsityPattern};

use crate::Scalar;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular dense system")]
    Singular,
}

/// Choice between the direct factorization and the iterative fallback.
#[derive(
    Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize, schemars::JsonSchema,
)]
#[serde(default)]
pub struct SolverOptions {
    /// Systems with more unknowns than this are solved with conjugate gradients.
    pub direct_max_dim: usize,
    pub cg_rel_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            direct_max_dim: 200_000,
            cg_rel_tol: 1e-10,
            cg_max_iter: 20_000,
        }
    }
}

/// A factored (or iteratively solved) symmetric positive definite system.
#[derive(Debug, Clone)]
pub enum SpdSolver<T: Scalar> {
    Direct(SkylineCholesky<T>),
    Iterative {
        matrix: CsrMatrix<T>,
        options: SolverOptions,
    },
}

impl<T: Scalar> SpdSolver<T> {
    pub fn new(matrix: CsrMatrix<T>, options: SolverOptions) -> Result<Self, LinalgError> {
        if matrix.nrows() > options.direct_max_dim {
            Ok(SpdSolver::Iterative { matrix, options })
        } else {
            Ok(SpdSolver::Direct(SkylineCholesky::factor(&matrix)?))
        }
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>, LinalgError> {
        match self {
            SpdSolver::Direct(chol) => chol.solve(rhs),
            SpdSolver::Iterative { matrix, options } => {
                let out = conjugate_gradient(
                    matrix,
                    rhs,
                    None,
                    T::c(options.cg_rel_tol),
                    options.cg_max_iter,
                )?;
                Ok(out.solution)
            }
        }
    }
}
