//! Memory-kernel master-equation solver: kernels, Laplace-domain machinery,
//! the exact propagator, dynamical-map analysis, and a direct time-domain
//! integrator used as an independent cross-check.

pub mod faddeeva;
pub mod invlaplace;
pub mod kernel;
pub mod solver;

pub use invlaplace::{invert_euler, invert_talbot, EULER_NODES, TALBOT_NODES};
pub use kernel::MemoryKernel;
pub use solver::{
    build_omega, cp_scan, dynamical_map, integrate_pmme_direct, inverse_map, nz_kernel,
    propagate, solve_w, tcl_generator, CpScan, PMMEProblem, PropagatorW, TimeGrid,
};
