//! Sparse and dense complex linear algebra used by the eigensolvers.

mod dense;
mod ldl;
mod sparse;

pub use dense::{cholesky, generalized_eigh, hermitian_eigh, solve_lower, solve_lower_adjoint, DMat};
pub use ldl::{norm2_sq, reverse_cuthill_mckee, LdlFactor};
pub use sparse::CsrMatrix;

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },
    #[error("zero pivot at position {index} during factorization")]
    ZeroPivot { index: usize },
}
