//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian within tolerance (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("trace deviates from expected value by {0:.3e}")]
    BadTrace(f64),

    #[error("matrix is not unitary (max deviation of U\u{2020}U from identity {0:.3e})")]
    NotUnitary(f64),

    #[error("empty Kraus operator list")]
    EmptyKrausList,

    #[error("measurement basis is not complete and orthonormal (deviation {0:.3e})")]
    IncompleteBasis(f64),

    #[error("weights are not normalized: sum deviates from 1 by {0:.3e}")]
    UnnormalizedWeights(f64),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("negative rate {0} in Lindblad generator")]
    NegativeRate(f64),

    #[error(
        "matrix logarithm branch ambiguity: eigenvalue {0} lies on the negative real axis; \
         reduce the collision duration so the map is closer to identity"
    )]
    LogBranchCut(num_complex::Complex64),

    #[error("matrix is not diagonalizable within conditioning threshold (cond = {0:.3e})")]
    IllConditionedEigenbasis(f64),

    #[error("map residual {0:.3e} exceeds tolerance {1:.3e}")]
    ResidualTooLarge(f64, f64),

    #[error("time {0} is not on the solver grid; re-solve on a grid containing it")]
    TimeOffGrid(f64),

    #[error(
        "inverse Laplace contour failure at t = {t}: node-doubling disagreement {deviation:.3e} \
         exceeds {tolerance:.3e}; try a finer grid or a different kernel representation"
    )]
    ContourFailure { t: f64, deviation: f64, tolerance: f64 },

    #[error("propagator matrix is singular at t = {0} (|det W| <= 1e-12)")]
    SingularPropagator(f64),

    #[error("Laplace evaluation outside the region of convergence at s = {0}")]
    OutsideConvergenceRegion(num_complex::Complex64),

    #[error("integration step {dt} too large; require dt <= {max_dt:.3e}")]
    StepTooLarge { dt: f64, max_dt: f64 },

    #[error("trace drift {0:.3e} detected during direct integration; reduce the step size")]
    TraceDrift(f64),

    #[error("Hermiticity loss {0:.3e} in reconstructed state exceeds 1e-8")]
    HermiticityLoss(f64),

    #[error("invalid kernel parameter: {0}")]
    InvalidKernel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("linear algebra backend error: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
