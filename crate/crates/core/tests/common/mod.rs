//! Shared fixtures for the integration suites, including a brute-force
//! full-tensor oracle that simulates the measured collision chain on the
//! joint system-plus-all-ancillas Hilbert space without any channel
//! composition.

#![allow(dead_code)]

use ndarray::array;
use num_complex::Complex64 as C64;

use pmme_core::collision::{CollisionSpec, MeasurementSpec};
use pmme_core::lindblad::LindbladGenerator;
use pmme_core::pmme::{MemoryKernel, PMMEProblem};
use pmme_core::qcore::{kron, CMat, CVec};
use pmme_core::{DensityMatrix, SuperoperatorMatrix};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn amplitude_damping_generator(gamma: f64) -> SuperoperatorMatrix {
    let sm = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
    LindbladGenerator::new(CMat::zeros((2, 2)), vec![(gamma, sm)])
        .unwrap()
        .build_superoperator()
        .unwrap()
}

/// Measurement channel of the qubit thermalization setting: sigma-x readout
/// after a partial-swap pre-measurement unitary (beta = 0.9) with the
/// thermal ancilla diag(0.6, 0.4); no collision part.
pub fn thermal_measurement_map() -> SuperoperatorMatrix {
    use pmme_core::collision::{measurement_channel_mixed, pswap};
    use pmme_core::UnitaryMatrix;
    let spec = CollisionSpec::new(2, 2, UnitaryMatrix::identity(4), 1.0).unwrap();
    let mspec = MeasurementSpec::new(MeasurementSpec::sigma_x_basis(), pswap(0.9, 2)).unwrap();
    let eta = DensityMatrix::from_diagonal(&[0.6, 0.4]).unwrap();
    measurement_channel_mixed(&spec, &mspec, &eta).unwrap()
}

pub fn initial_state() -> DensityMatrix {
    let a = 1.0 / 5f64.sqrt();
    DensityMatrix::pure(&array![c(a, 0.0), c(2.0 * a, 0.0)]).unwrap()
}

pub fn qubit_problem(kernel: MemoryKernel) -> PMMEProblem {
    PMMEProblem::new(amplitude_damping_generator(1.0), thermal_measurement_map(), kernel).unwrap()
}

/// Embed a two-body operator acting on (system, ancilla `slot`) into the
/// joint space system (x) ancilla_1 (x) ... (x) ancilla_n. `slot` is
/// 1-based; `u` is indexed as system-major: `u[(s, a)] = u[s * d_a + a]`.
pub fn embed_pair(u: &CMat, d_s: usize, d_a: usize, n: usize, slot: usize) -> CMat {
    assert!((1..=n).contains(&slot));
    let anc_dim = d_a.pow(n as u32);
    let dim = d_s * anc_dim;
    let stride = d_a.pow((n - slot) as u32);
    let mut out = CMat::zeros((dim, dim));
    for col in 0..dim {
        let s = col / anc_dim;
        let rest = col % anc_dim;
        let a = (rest / stride) % d_a;
        let frame = rest - a * stride; // all other ancilla indices
        for s2 in 0..d_s {
            for a2 in 0..d_a {
                let row = s2 * anc_dim + frame + a2 * stride;
                let v = u[[s2 * d_a + a2, s * d_a + a]];
                if v.norm_sqr() != 0.0 {
                    out[[row, col]] = v;
                }
            }
        }
    }
    out
}

/// Embed a single-ancilla operator on `slot` (1-based) into the joint space.
pub fn embed_ancilla(op: &CMat, d_s: usize, d_a: usize, n: usize, slot: usize) -> CMat {
    let mut pair = CMat::zeros((d_s * d_a, d_s * d_a));
    for s in 0..d_s {
        for a in 0..d_a {
            for a2 in 0..d_a {
                pair[[s * d_a + a2, s * d_a + a]] = op[[a2, a]];
            }
        }
    }
    embed_pair(&pair, d_s, d_a, n, slot)
}

/// Full-tensor simulation of the measured collision chain: `n` fresh
/// ancillas in state `eta` collide sequentially; right after collision `m`
/// the pre-measurement unitary hits (system, ancilla m) and ancilla m is
/// measured non-selectively in the given basis. Returns the reduced system
/// state after all `n` collisions.
pub fn brute_force_run(
    spec: &CollisionSpec,
    mspec: &MeasurementSpec,
    eta: &DensityMatrix,
    rho0: &DensityMatrix,
    m: usize,
    n: usize,
) -> DensityMatrix {
    let d_s = spec.system_dim;
    let d_a = spec.ancilla_dim;
    assert!((1..=n).contains(&m));

    // joint state rho0 (x) eta (x) ... (x) eta
    let mut joint = rho0.matrix().clone();
    for _ in 0..n {
        joint = kron(&joint, eta.matrix());
    }

    let apply = |rho: &CMat, op: &CMat| -> CMat {
        let conj_t = op.t().mapv(|z| z.conj());
        op.dot(rho).dot(&conj_t)
    };

    for k in 1..=n {
        let u_full = embed_pair(spec.unitary.matrix(), d_s, d_a, n, k);
        joint = apply(&joint, &u_full);
        if k == m {
            let um_full = embed_pair(mspec.pre_measurement_unitary.matrix(), d_s, d_a, n, k);
            joint = apply(&joint, &um_full);
            // non-selective projective measurement of ancilla k
            let mut measured = CMat::zeros(joint.dim());
            for b in &mspec.basis {
                let proj = projector(b);
                let p_full = embed_ancilla(&proj, d_s, d_a, n, k);
                measured = measured + apply(&joint, &p_full);
            }
            joint = measured;
        }
    }

    // trace out every ancilla at once
    let anc_dim = d_a.pow(n as u32);
    let mut reduced = CMat::zeros((d_s, d_s));
    for i in 0..d_s {
        for j in 0..d_s {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..anc_dim {
                acc += joint[[i * anc_dim + r, j * anc_dim + r]];
            }
            reduced[[i, j]] = acc;
        }
    }
    DensityMatrix::from_noisy(reduced).expect("brute-force state is physical")
}

fn projector(v: &CVec) -> CMat {
    let d = v.len();
    let mut p = CMat::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            p[[i, j]] = v[i] * v[j].conj();
        }
    }
    p
}
