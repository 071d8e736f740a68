//! GKSL (Lindblad) generators: construction from Hamiltonian and jump
//! operators, extraction from a collision map via the matrix logarithm, and
//! the biorthonormal spectral decomposition (damping basis) of a generator.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qcore::linalg::{
    condition_number, eig_general, hermiticity_deviation, inverse,
};
use crate::qcore::{
    dagger, identity, kron, max_abs, trace, unvec_op, CMat, SuperoperatorMatrix,
};

/// A GKSL generator `L[rho] = -i[H, rho] + sum_k a_k (L_k rho L_k^dagger
/// - {L_k^dagger L_k, rho}/2)` with non-negative rates `a_k`.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    pub hamiltonian: CMat,
    pub jump_operators: Vec<(f64, CMat)>,
}

impl LindbladGenerator {
    pub fn new(hamiltonian: CMat, jump_operators: Vec<(f64, CMat)>) -> Result<Self> {
        let d = hamiltonian.nrows();
        if hamiltonian.ncols() != d || d == 0 {
            return Err(Error::DimensionMismatch(
                "Hamiltonian must be square and non-empty".into(),
            ));
        }
        let dev = hermiticity_deviation(&hamiltonian);
        if dev > 1e-10 {
            return Err(Error::NotHermitian(dev));
        }
        for (rate, l) in &jump_operators {
            if *rate < 0.0 {
                return Err(Error::NegativeRate(*rate));
            }
            if l.dim() != (d, d) {
                return Err(Error::DimensionMismatch(
                    "jump operator dimension differs from Hamiltonian".into(),
                ));
            }
        }
        Ok(Self {
            hamiltonian,
            jump_operators,
        })
    }

    /// Vectorized generator. With column stacking,
    /// `-i[H, .] -> -i (I (x) H - H^T (x) I)` and each dissipator maps to
    /// `a (conj(L) (x) L - I (x) L^dagger L / 2 - (L^dagger L)^T (x) I / 2)`.
    pub fn build_superoperator(&self) -> Result<SuperoperatorMatrix> {
        let d = self.hamiltonian.nrows();
        let id = identity(d);
        let h = &self.hamiltonian;
        let mut mat = (kron(&id, h) - kron(&h.t().to_owned(), &id)).mapv(|z| z * C64::new(0.0, -1.0));
        for (rate, l) in &self.jump_operators {
            let ldl = dagger(l).dot(l);
            let term = kron(&l.mapv(|z| z.conj()), l)
                - kron(&id, &ldl).mapv(|z| z * 0.5)
                - kron(&ldl.t().to_owned(), &id).mapv(|z| z * 0.5);
            mat = mat + term.mapv(|z| z * *rate);
        }
        SuperoperatorMatrix::new(d, mat)
    }
}

/// Extract a time-independent generator from one collision step:
/// `L = log(xi) / tau`, principal branch. Fails if any eigenvalue of `xi`
/// sits on the negative real axis or if re-exponentiating does not
/// reproduce `xi` to within `1e-10`.
pub fn from_collision_map(xi: &SuperoperatorMatrix, tau: f64) -> Result<SuperoperatorMatrix> {
    if tau <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "from_collision_map: tau must be positive, got {tau}"
        )));
    }
    let log = crate::qcore::logm(xi.matrix())?;
    let gen = log.mapv(|z| z / tau);
    let back = crate::qcore::expm(&log)?;
    let residual = max_abs(&(&back - xi.matrix()));
    if residual > 1e-10 {
        return Err(Error::ResidualTooLarge(residual, 1e-10));
    }
    SuperoperatorMatrix::new(xi.hilbert_dim(), gen)
}

/// Damping basis of a diagonalizable superoperator: eigenvalues `lambda_i`,
/// right operators `R_i` (de-vectorized eigenvector columns) and left
/// operators `L_i` satisfying the *non-conjugated* pairing
/// `Tr(L_i R_j) = delta_ij`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<C64>,
    pub right_ops: Vec<CMat>,
    pub left_ops: Vec<CMat>,
    pub condition_number: f64,
    /// Eigenvector matrix (columns are `vec(R_i)`).
    pub basis: CMat,
    /// Its inverse (rows encode the left operators).
    pub basis_inv: CMat,
}

impl SpectralDecomposition {
    pub fn hilbert_dim(&self) -> usize {
        self.right_ops[0].nrows()
    }

    /// Expansion coefficients `mu_i = Tr(L_i rho)` (plain trace, no
    /// conjugation).
    pub fn coefficients(&self, rho: &CMat) -> Vec<C64> {
        self.left_ops.iter().map(|l| pairing(l, rho)).collect()
    }

    /// `sum_i c_i R_i`.
    pub fn reconstruct(&self, coeffs: &[C64]) -> CMat {
        let d = self.hilbert_dim();
        let mut acc = CMat::zeros((d, d));
        for (c, r) in coeffs.iter().zip(&self.right_ops) {
            acc = acc + r.mapv(|z| z * *c);
        }
        acc
    }

    /// `max_ij |Tr(L_i R_j) - delta_ij|`.
    pub fn biorthonormality_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for (i, l) in self.left_ops.iter().enumerate() {
            for (j, r) in self.right_ops.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((pairing(l, r) - C64::new(expect, 0.0)).norm());
            }
        }
        dev
    }
}

/// The non-conjugated Hilbert-Schmidt-style pairing `Tr(L X)`.
pub fn pairing(l: &CMat, x: &CMat) -> C64 {
    trace(&l.dot(x))
}

/// Diagonalize a superoperator into its damping basis. Fails with
/// [`Error::IllConditionedEigenbasis`] when the eigenvector matrix has
/// condition number above `1e8` (defective or nearly defective generator).
pub fn spectral_decompose(s: &SuperoperatorMatrix) -> Result<SpectralDecomposition> {
    let d = s.hilbert_dim();
    let (vals, vecs) = eig_general(s.matrix())?;
    let cond = condition_number(&vecs)?;
    if cond > 1e8 {
        return Err(Error::IllConditionedEigenbasis(cond));
    }
    let vinv = inverse(&vecs)?;
    let n = d * d;
    let mut right_ops = Vec::with_capacity(n);
    let mut left_ops = Vec::with_capacity(n);
    for i in 0..n {
        right_ops.push(unvec_op(&vecs.column(i).to_owned(), d));
        // row i of V^{-1}, de-vectorized then transposed (not conjugated) so
        // that Tr(L_i R_j) equals the plain dot product of row i with column j
        left_ops.push(unvec_op(&vinv.row(i).to_owned(), d).t().to_owned());
    }
    Ok(SpectralDecomposition {
        eigenvalues: vals.to_vec(),
        right_ops,
        left_ops,
        condition_number: cond,
        basis: vecs,
        basis_inv: vinv,
    })
}
