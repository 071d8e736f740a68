//! Validated domain types: density matrices, unitaries, superoperators, and
//! Choi matrices.

use num_complex::Complex64 as C64;

use super::linalg::{
    self, dagger, eigvalsh, hermiticity_deviation, identity, max_abs, trace, unvec_op, vec_op,
    CMat, CVec,
};
use crate::error::{Error, Result};

/// A d x d complex positive-semidefinite unit-trace matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    /// Validate Hermiticity (1e-9), unit trace (1e-12 on construction from
    /// exact inputs is too strict for propagated states, so 1e-10 is used),
    /// and positivity (min eigenvalue >= -1e-10).
    pub fn new(mat: CMat) -> Result<Self> {
        let (r, c) = mat.dim();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square and non-empty, got {r}x{c}"
            )));
        }
        let dev = hermiticity_deviation(&mat);
        if dev > 1e-9 {
            return Err(Error::NotHermitian(dev));
        }
        let tr = trace(&mat);
        let tr_dev = (tr - C64::new(1.0, 0.0)).norm();
        if tr_dev > 1e-10 {
            return Err(Error::BadTrace(tr_dev));
        }
        let min = eigvalsh(&mat)?
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { mat })
    }

    /// Symmetrize and renormalize small numerical noise before validating.
    /// The pre-cleanup Hermiticity deviation must stay below 1e-8.
    pub fn from_noisy(mat: CMat) -> Result<Self> {
        let dev = hermiticity_deviation(&mat);
        if dev > 1e-8 {
            return Err(Error::HermiticityLoss(dev));
        }
        let sym = (&mat + &dagger(&mat)).mapv(|z| z * 0.5);
        Self::new(sym)
    }

    pub fn pure(amplitudes: &CVec) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::BadTrace((norm - 1.0).abs()));
        }
        let d = amplitudes.len();
        let mut mat = CMat::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                mat[[i, j]] = amplitudes[i] * amplitudes[j].conj();
            }
        }
        Self::new(mat)
    }

    pub fn from_diagonal(populations: &[f64]) -> Result<Self> {
        let d = populations.len();
        let mut mat = CMat::zeros((d, d));
        for (i, &p) in populations.iter().enumerate() {
            mat[[i, i]] = C64::new(p, 0.0);
        }
        Self::new(mat)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: identity(d).mapv(|z| z / d as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    /// Spectral decomposition into pure components `(p_k, |chi_k>)` with
    /// negligible weights dropped.
    pub fn pure_components(&self) -> Result<Vec<(f64, CVec)>> {
        use ndarray_linalg::{Eigh, UPLO};
        let sym = (&self.mat + &dagger(&self.mat)).mapv(|z| z * 0.5);
        let (vals, vecs) = sym.eigh(UPLO::Lower)?;
        let mut out = Vec::new();
        for (k, &p) in vals.iter().enumerate() {
            if p > 1e-12 {
                out.push((p, vecs.column(k).to_owned()));
            }
        }
        Ok(out)
    }
}

/// A unitary matrix: `U^dagger U = I` within 1e-10.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    mat: CMat,
}

impl UnitaryMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        let (r, c) = mat.dim();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch(format!(
                "unitary must be square and non-empty, got {r}x{c}"
            )));
        }
        let dev = max_abs(&(dagger(&mat).dot(&mat) - identity(r)));
        if dev > 1e-10 {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { mat })
    }

    pub fn identity(d: usize) -> Self {
        Self { mat: identity(d) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }
}

/// A d^2 x d^2 matrix acting on column-stacking-vectorized operators.
#[derive(Debug, Clone)]
pub struct SuperoperatorMatrix {
    hilbert_dim: usize,
    mat: CMat,
}

impl SuperoperatorMatrix {
    pub fn new(hilbert_dim: usize, mat: CMat) -> Result<Self> {
        let n = hilbert_dim * hilbert_dim;
        if mat.dim() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "superoperator on dimension {hilbert_dim} must be {n}x{n}, got {:?}",
                mat.dim()
            )));
        }
        Ok(Self { hilbert_dim, mat })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            hilbert_dim: d,
            mat: identity(d * d),
        }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Apply to an operator: de-vectorized `S vec(rho)`.
    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        let d = self.hilbert_dim;
        if rho.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "apply: operator is {:?}, superoperator acts on {d}x{d}",
                rho.dim()
            )));
        }
        Ok(unvec_op(&self.mat.dot(&vec_op(rho)), d))
    }

    /// Composition `self` after `other`, i.e. the map `rho -> self[other[rho]]`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.hilbert_dim != other.hilbert_dim {
            return Err(Error::DimensionMismatch(
                "compose: superoperators act on different dimensions".into(),
            ));
        }
        Ok(Self {
            hilbert_dim: self.hilbert_dim,
            mat: self.mat.dot(&other.mat),
        })
    }

    /// Deviation of the vectorized identity from being a left fixed point,
    /// `max |vec(I)^dagger S - vec(I)^dagger|`; zero for trace-preserving maps.
    pub fn trace_preservation_deviation(&self) -> f64 {
        let d = self.hilbert_dim;
        let vid = vec_op(&identity(d));
        let mut dev: f64 = 0.0;
        for k in 0..d * d {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d * d {
                acc += vid[i].conj() * self.mat[[i, k]];
            }
            dev = dev.max((acc - vid[k].conj()).norm());
        }
        dev
    }

    /// Deviation of `vec(I)^dagger S` from zero; zero for trace-annihilating
    /// generators.
    pub fn trace_annihilation_deviation(&self) -> f64 {
        let d = self.hilbert_dim;
        let vid = vec_op(&identity(d));
        let mut dev: f64 = 0.0;
        for k in 0..d * d {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d * d {
                acc += vid[i].conj() * self.mat[[i, k]];
            }
            dev = dev.max(acc.norm());
        }
        dev
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            hilbert_dim: self.hilbert_dim,
            mat: self.mat.mapv(|z| z * factor),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.hilbert_dim != other.hilbert_dim {
            return Err(Error::DimensionMismatch(
                "add: superoperators act on different dimensions".into(),
            ));
        }
        Ok(Self {
            hilbert_dim: self.hilbert_dim,
            mat: &self.mat + &other.mat,
        })
    }

    /// `e^{self * t}` as a superoperator.
    pub fn exp_scaled(&self, t: f64) -> Result<Self> {
        let m = self.mat.mapv(|z| z * t);
        Ok(Self {
            hilbert_dim: self.hilbert_dim,
            mat: linalg::expm(&m)?,
        })
    }
}

/// The Choi matrix of a map on d-dimensional operators, with the ancilla
/// index first: `C = sum_{k,l} |k><l| (x) Phi[|k><l|]`.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    hilbert_dim: usize,
    mat: CMat,
}

impl ChoiMatrix {
    pub fn new(hilbert_dim: usize, mat: CMat) -> Result<Self> {
        let n = hilbert_dim * hilbert_dim;
        if mat.dim() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix for dimension {hilbert_dim} must be {n}x{n}, got {:?}",
                mat.dim()
            )));
        }
        Ok(Self { hilbert_dim, mat })
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Minimum eigenvalue of the symmetrized Choi matrix; the map is
    /// completely positive iff this is non-negative (up to tolerance).
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let sym = (&self.mat + &dagger(&self.mat)).mapv(|z| z * 0.5);
        Ok(eigvalsh(&sym)?
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min))
    }
}
