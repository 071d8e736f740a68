//! Discrete collisional-model engine: memoryless collision chains and the
//! measurement-modified probabilistic chain that induces bath memory.
//!
//! The system collides once with each ancilla of a stream of identically
//! prepared ancillas. A non-selective projective measurement on ancilla `m`
//! (preceded by an extra system-ancilla unitary) turns the m-th collision
//! into a CPTP measurement channel; averaging the measured-ancilla index
//! over a weight distribution produces the memory-kernel dynamics.

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qcore::{
    dagger, expm, identity, kron, max_abs, partial_trace, superop_from_kraus, CMat, CVec,
    DensityMatrix, Subsystem, SuperoperatorMatrix, UnitaryMatrix,
};

/// One collision: joint unitary on system (x) ancilla, lasting `tau`.
#[derive(Debug, Clone)]
pub struct CollisionSpec {
    pub system_dim: usize,
    pub ancilla_dim: usize,
    pub unitary: UnitaryMatrix,
    pub tau: f64,
}

impl CollisionSpec {
    pub fn new(
        system_dim: usize,
        ancilla_dim: usize,
        unitary: UnitaryMatrix,
        tau: f64,
    ) -> Result<Self> {
        if unitary.dim() != system_dim * ancilla_dim {
            return Err(Error::DimensionMismatch(format!(
                "collision unitary is {}-dimensional, expected {}",
                unitary.dim(),
                system_dim * ancilla_dim
            )));
        }
        if tau <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "collision duration tau must be positive, got {tau}"
            )));
        }
        Ok(Self {
            system_dim,
            ancilla_dim,
            unitary,
            tau,
        })
    }
}

/// `U(tau) = exp(-i (H_S (x) I + I (x) H_B + V) tau)`.
pub fn collision_unitary_from_hamiltonians(
    h_s: &CMat,
    h_b: &CMat,
    v: &CMat,
    tau: f64,
) -> Result<UnitaryMatrix> {
    for (name, h) in [("H_S", h_s), ("H_B", h_b), ("V", v)] {
        let dev = max_abs(&(h - &dagger(h)));
        if dev > 1e-10 {
            log::debug!("{name} Hermiticity deviation {dev:.3e}");
            return Err(Error::NotHermitian(dev));
        }
    }
    let d_s = h_s.nrows();
    let d_b = h_b.nrows();
    if v.nrows() != d_s * d_b {
        return Err(Error::DimensionMismatch(format!(
            "V is {}-dimensional, expected {}",
            v.nrows(),
            d_s * d_b
        )));
    }
    let total = kron(h_s, &identity(d_b)) + kron(&identity(d_s), h_b) + v;
    let gen = total.mapv(|z| z * C64::new(0.0, -tau));
    UnitaryMatrix::new(expm(&gen)?)
}

/// Swap operator on `d (x) d`.
pub fn swap_operator(d: usize) -> CMat {
    let mut s = CMat::zeros((d * d, d * d));
    for i in 0..d {
        for j in 0..d {
            s[[i * d + j, j * d + i]] = C64::new(1.0, 0.0);
        }
    }
    s
}

/// Partial swap `U(alpha) = cos(alpha) I + i sin(alpha) S` on `d (x) d`.
pub fn pswap(alpha: f64, d: usize) -> UnitaryMatrix {
    let s = swap_operator(d);
    let mat = identity(d * d).mapv(|z| z * alpha.cos()) + s.mapv(|z| z * C64::new(0.0, alpha.sin()));
    UnitaryMatrix::new(mat).expect("partial swap is unitary by construction")
}

/// Non-selective measurement of one ancilla: orthonormal basis plus the
/// pre-measurement system-ancilla unitary.
#[derive(Debug, Clone)]
pub struct MeasurementSpec {
    pub basis: Vec<CVec>,
    pub pre_measurement_unitary: UnitaryMatrix,
}

impl MeasurementSpec {
    pub fn new(basis: Vec<CVec>, pre_measurement_unitary: UnitaryMatrix) -> Result<Self> {
        let d = basis
            .first()
            .ok_or_else(|| Error::IncompleteBasis(f64::INFINITY))?
            .len();
        if basis.len() != d {
            return Err(Error::IncompleteBasis(f64::INFINITY));
        }
        // orthonormality <M^l|M^l'> = delta and completeness sum |M^l><M^l| = I
        let mut dev: f64 = 0.0;
        for (l, u) in basis.iter().enumerate() {
            for (lp, v) in basis.iter().enumerate() {
                let inner: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                let expect = if l == lp { 1.0 } else { 0.0 };
                dev = dev.max((inner - C64::new(expect, 0.0)).norm());
            }
        }
        let mut completeness = CMat::zeros((d, d));
        for u in &basis {
            for i in 0..d {
                for j in 0..d {
                    completeness[[i, j]] += u[i] * u[j].conj();
                }
            }
        }
        dev = dev.max(max_abs(&(completeness - identity(d))));
        if dev > 1e-10 {
            return Err(Error::IncompleteBasis(dev));
        }
        Ok(Self {
            basis,
            pre_measurement_unitary,
        })
    }

    /// Eigenbasis of sigma_x (qubit ancilla).
    pub fn sigma_x_basis() -> Vec<CVec> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        vec![
            Array1::from(vec![C64::new(h, 0.0), C64::new(h, 0.0)]),
            Array1::from(vec![C64::new(h, 0.0), C64::new(-h, 0.0)]),
        ]
    }

    /// Computational (sigma_z) basis for a `d`-dimensional ancilla.
    pub fn sigma_z_basis(d: usize) -> Vec<CVec> {
        (0..d)
            .map(|k| {
                let mut v = Array1::zeros(d);
                v[k] = C64::new(1.0, 0.0);
                v
            })
            .collect()
    }
}

/// Normalized non-negative weights `k_m`, `m = 1..=N`.
#[derive(Debug, Clone)]
pub struct DiscreteKernelWeights {
    weights: Vec<f64>,
}

impl DiscreteKernelWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::UnnormalizedWeights(f64::INFINITY));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::UnnormalizedWeights((sum - 1.0).abs()));
        }
        Ok(Self { weights })
    }

    /// Sub-normalized weights: the residual mass `1 - sum` stays on the
    /// unmeasured chain (used when sampling a continuum kernel as
    /// `k_m = k(m tau) tau`, whose finite sum undershoots one).
    pub fn with_tail(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::UnnormalizedWeights(f64::INFINITY));
        }
        let sum: f64 = weights.iter().sum();
        if sum > 1.0 + 1e-9 {
            return Err(Error::UnnormalizedWeights(sum - 1.0));
        }
        Ok(Self { weights })
    }

    /// Normalize arbitrary non-negative weights.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() || raw.iter().any(|&w| w < 0.0) {
            return Err(Error::UnnormalizedWeights(f64::INFINITY));
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::UnnormalizedWeights(1.0));
        }
        Ok(Self {
            weights: raw.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of measuring ancilla `m` (1-based).
    pub fn weight(&self, m: usize) -> f64 {
        self.weights[m - 1]
    }
}

/// `k_m proportional to exp(-(m - center)^2 / (2 width^2))` over `m = 1..=N`.
pub fn gaussian_weights(center: usize, width: f64, n: usize) -> Result<DiscreteKernelWeights> {
    if n == 0 {
        return Err(Error::InvalidConfig("gaussian_weights: N must be >= 1".into()));
    }
    if width <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "gaussian_weights: width must be positive, got {width}"
        )));
    }
    let c = center as f64;
    let raw: Vec<f64> = (1..=n)
        .map(|m| {
            let z = (m as f64 - c) / width;
            (-0.5 * z * z).exp()
        })
        .collect();
    DiscreteKernelWeights::normalized(raw)
}

/// The collision map `xi(tau)` as a superoperator on the system:
/// `xi[rho] = Tr_B{ U (rho (x) eta) U^dagger }`.
pub fn collision_map_superop(spec: &CollisionSpec, eta: &DensityMatrix) -> Result<SuperoperatorMatrix> {
    channel_from_joint_unitary(&spec.unitary, spec.system_dim, eta)
}

/// Reduced channel of a joint unitary with a fixed ancilla state, built as a
/// Kraus set `sqrt(p_k) <b| W |chi_k>` over the ancilla eigenensemble.
pub fn channel_from_joint_unitary(
    w: &UnitaryMatrix,
    system_dim: usize,
    eta: &DensityMatrix,
) -> Result<SuperoperatorMatrix> {
    let d_a = eta.dim();
    if w.dim() != system_dim * d_a {
        return Err(Error::DimensionMismatch(format!(
            "joint unitary is {}-dimensional, expected {}",
            w.dim(),
            system_dim * d_a
        )));
    }
    let basis = MeasurementSpec::sigma_z_basis(d_a);
    let kraus = measurement_kraus_mixed(w, system_dim, &basis, eta)?;
    superop_from_kraus(&kraus)
}

/// One collision: `Tr_B{ U (rho (x) eta) U^dagger }`.
pub fn markov_step(
    spec: &CollisionSpec,
    eta: &DensityMatrix,
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    if rho.dim() != spec.system_dim || eta.dim() != spec.ancilla_dim {
        return Err(Error::DimensionMismatch(format!(
            "markov_step: state dims ({}, {}) do not match spec ({}, {})",
            rho.dim(),
            eta.dim(),
            spec.system_dim,
            spec.ancilla_dim
        )));
    }
    let u = spec.unitary.matrix();
    let joint = u.dot(&kron(rho.matrix(), eta.matrix())).dot(&dagger(u));
    let reduced = partial_trace(&joint, spec.system_dim, spec.ancilla_dim, Subsystem::A)?;
    DensityMatrix::from_noisy(reduced)
}

/// Trajectory `[rho0, xi[rho0], ..., xi^N[rho0]]`.
pub fn markov_evolve(
    spec: &CollisionSpec,
    eta: &DensityMatrix,
    rho0: &DensityMatrix,
    n: usize,
) -> Result<Vec<DensityMatrix>> {
    let mut traj = Vec::with_capacity(n + 1);
    traj.push(rho0.clone());
    for _ in 0..n {
        let next = markov_step(spec, eta, traj.last().unwrap())?;
        traj.push(next);
    }
    Ok(traj)
}

/// Kraus operators `A^l = <M^l| W |chi>` of the measured collision, for a
/// pure ancilla state `chi`.
pub fn measurement_kraus(
    w: &CMat,
    system_dim: usize,
    basis: &[CVec],
    chi: &CVec,
) -> Vec<CMat> {
    let d_a = chi.len();
    basis
        .iter()
        .map(|m| {
            let mut a = CMat::zeros((system_dim, system_dim));
            for i in 0..system_dim {
                for j in 0..system_dim {
                    let mut acc = C64::new(0.0, 0.0);
                    for b in 0..d_a {
                        for bp in 0..d_a {
                            acc += m[b].conj() * w[[i * d_a + b, j * d_a + bp]] * chi[bp];
                        }
                    }
                    a[[i, j]] = acc;
                }
            }
            a
        })
        .collect()
}

/// Kraus operators `sqrt(p_k) <M^l| W |chi_k>` over the eigenensemble of a
/// mixed ancilla state.
pub fn measurement_kraus_mixed(
    w: &UnitaryMatrix,
    system_dim: usize,
    basis: &[CVec],
    eta: &DensityMatrix,
) -> Result<Vec<CMat>> {
    let mut kraus = Vec::new();
    for (p, chi) in eta.pure_components()? {
        let scale = C64::new(p.sqrt(), 0.0);
        for a in measurement_kraus(w.matrix(), system_dim, basis, &chi) {
            kraus.push(a.mapv(|z| z * scale));
        }
    }
    Ok(kraus)
}

/// The measurement channel of a measured collision with a pure ancilla state:
/// the combined unitary is `U_M U(tau)` and the Kraus set is checked for
/// completeness.
pub fn measurement_channel(
    spec: &CollisionSpec,
    mspec: &MeasurementSpec,
    chi: &CVec,
) -> Result<SuperoperatorMatrix> {
    let norm: f64 = chi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::BadTrace((norm - 1.0).abs()));
    }
    let w = mspec
        .pre_measurement_unitary
        .matrix()
        .dot(spec.unitary.matrix());
    let kraus = measurement_kraus(&w, spec.system_dim, &mspec.basis, chi);
    let dev = crate::qcore::kraus_completeness_deviation(&kraus);
    if dev > 1e-10 {
        return Err(Error::IncompleteBasis(dev));
    }
    superop_from_kraus(&kraus)
}

/// Measurement channel for a mixed ancilla state (convex extension of
/// [`measurement_channel`] over the ancilla eigenensemble).
pub fn measurement_channel_mixed(
    spec: &CollisionSpec,
    mspec: &MeasurementSpec,
    eta: &DensityMatrix,
) -> Result<SuperoperatorMatrix> {
    let w = UnitaryMatrix::new(
        mspec
            .pre_measurement_unitary
            .matrix()
            .dot(spec.unitary.matrix()),
    )?;
    let kraus = measurement_kraus_mixed(&w, spec.system_dim, &mspec.basis, eta)?;
    let dev = crate::qcore::kraus_completeness_deviation(&kraus);
    if dev > 1e-10 {
        return Err(Error::IncompleteBasis(dev));
    }
    superop_from_kraus(&kraus)
}

/// System state at `t = N tau` when the measurement deterministically hits
/// ancilla `m`: `xi^{N-m} . E . xi^{m-1}` applied to `rho0`.
pub fn deterministic_run(
    spec: &CollisionSpec,
    mspec: &MeasurementSpec,
    eta: &DensityMatrix,
    rho0: &DensityMatrix,
    m: usize,
    n: usize,
) -> Result<DensityMatrix> {
    if m < 1 || m > n {
        return Err(Error::IndexOutOfRange { index: m, max: n });
    }
    let channel = measurement_channel_mixed(spec, mspec, eta)?;
    let pre = markov_evolve(spec, eta, rho0, m - 1)?;
    let measured = DensityMatrix::from_noisy(channel.apply(pre.last().unwrap().matrix())?)?;
    let post = markov_evolve(spec, eta, &measured, n - m)?;
    Ok(post.last().unwrap().clone())
}

/// Weighted average of [`deterministic_run`] over the measured-ancilla index:
/// `rho(N tau) = sum_m w_m xi^{N-m}[ E[ xi^{m-1}[rho0] ] ]`.
///
/// Evaluated with a single backward (Horner) sweep so the cost is O(N)
/// channel applications instead of O(N^2).
pub fn probabilistic_run(
    spec: &CollisionSpec,
    mspec: &MeasurementSpec,
    eta: &DensityMatrix,
    rho0: &DensityMatrix,
    weights: &DiscreteKernelWeights,
    n: usize,
) -> Result<DensityMatrix> {
    let traj = probabilistic_trajectory(spec, mspec, eta, rho0, weights, n)?;
    Ok(traj.into_iter().last().unwrap())
}

/// Marginal state after each collision of the probabilistic chain. At step
/// `n'`, measurements on ancillas `m <= n'` have been applied with their
/// weights; the residual weight mass rides on the plain chain.
pub fn probabilistic_trajectory(
    spec: &CollisionSpec,
    mspec: &MeasurementSpec,
    eta: &DensityMatrix,
    rho0: &DensityMatrix,
    weights: &DiscreteKernelWeights,
    n: usize,
) -> Result<Vec<DensityMatrix>> {
    if weights.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "probabilistic_run: {} weights for N = {n} collisions",
            weights.len()
        )));
    }
    let xi = collision_map_superop(spec, eta)?;
    let channel = measurement_channel_mixed(spec, mspec, eta)?;

    let mut traj = Vec::with_capacity(n + 1);
    traj.push(rho0.clone());

    // measured branch accumulator and the unmeasured (plain-chain) state
    let mut acc = CMat::zeros((spec.system_dim, spec.system_dim));
    let mut plain = rho0.matrix().clone();
    let mut tail_mass = 1.0;
    for m in 1..=n {
        let w = weights.weight(m);
        let sigma = channel.apply(&plain)?; // measured collision hits ancilla m
        acc = xi.apply(&acc)? + sigma.mapv(|z| z * w);
        plain = xi.apply(&plain)?;
        tail_mass -= w;
        let state = &acc + &plain.mapv(|z| z * tail_mass.max(0.0));
        traj.push(DensityMatrix::from_noisy(state)?);
    }
    Ok(traj)
}
