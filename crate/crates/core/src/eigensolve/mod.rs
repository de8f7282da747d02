//! Symmetric eigenvalue kernel: band-to-tridiagonal reduction, Sturm-sequence
//! bisection, and lowest-k extraction for pencils with positive diagonal weight.

mod band;
mod generalized;
mod tridiagonal;

pub use band::{reduce_band_to_tridiagonal, BandReduction, Rotation, SymBand};
pub use generalized::{lowest_k_generalized, SymmetricPencil};
pub use tridiagonal::{tridiag_eigen_bisection, EigenResult, Selection, SolverStats, Tridiagonal};

/// Default bisection tolerance, relative to `max(1, |lambda|)`.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EigenError {
    #[error("weight entry {index} is not positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("matrix dimension {matrix} does not match weight length {weight}")]
    DimensionMismatch { matrix: usize, weight: usize },
    #[error("eigenvalue {index} ({value}) failed residual check: {residual:e} > {tol:e}")]
    ResidualTooLarge {
        index: usize,
        value: f64,
        residual: f64,
        tol: f64,
    },
}
