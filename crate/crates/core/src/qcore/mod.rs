//! Foundational complex linear algebra for finite-dimensional quantum
//! states, channels, and superoperators.

pub mod linalg;
pub mod superop;
pub mod types;

pub use linalg::{
    dagger, expm, fidelity, identity, kron, logm, max_abs, min_eigenvalue_hermitian,
    partial_trace, sqrtm, sqrtm_psd, trace, trace_distance, unvec_op, vec_op, CMat, CVec,
    Subsystem,
};
pub use superop::{choi_of, kraus_completeness_deviation, superop_from_kraus, superop_from_unitary};
pub use types::{ChoiMatrix, DensityMatrix, SuperoperatorMatrix, UnitaryMatrix};
