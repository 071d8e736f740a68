//! Building superoperators from Kraus sets and unitaries, and the Choi
//! representation of a map.

use num_complex::Complex64 as C64;

use super::linalg::{dagger, identity, kron, max_abs, CMat};
use super::types::{ChoiMatrix, SuperoperatorMatrix, UnitaryMatrix};
use crate::error::{Error, Result};

/// Superoperator whose action on vectorized rho is `sum_l A_l rho A_l^dagger`.
///
/// With column stacking, each term contributes `conj(A_l) (x) A_l`.
pub fn superop_from_kraus(kraus: &[CMat]) -> Result<SuperoperatorMatrix> {
    let first = kraus.first().ok_or(Error::EmptyKrausList)?;
    let (d, c) = first.dim();
    if d != c {
        return Err(Error::DimensionMismatch(
            "Kraus operators must be square".into(),
        ));
    }
    let mut mat = CMat::zeros((d * d, d * d));
    for a in kraus {
        if a.dim() != (d, d) {
            return Err(Error::DimensionMismatch(
                "Kraus operators differ in dimension".into(),
            ));
        }
        mat = mat + kron(&a.mapv(|z| z.conj()), a);
    }
    SuperoperatorMatrix::new(d, mat)
}

/// Deviation of `sum_l A_l^dagger A_l` from the identity.
pub fn kraus_completeness_deviation(kraus: &[CMat]) -> f64 {
    let d = kraus[0].nrows();
    let mut acc = CMat::zeros((d, d));
    for a in kraus {
        acc = acc + dagger(a).dot(a);
    }
    max_abs(&(acc - identity(d)))
}

/// The conjugation map `rho -> U rho U^dagger`.
pub fn superop_from_unitary(u: &UnitaryMatrix) -> SuperoperatorMatrix {
    superop_from_kraus(std::slice::from_ref(u.matrix())).expect("single unitary Kraus set")
}

/// Choi matrix `sum_{k,l} |k><l| (x) S[|k><l|]` (ancilla index first, the
/// map acting on the second slot of each block).
pub fn choi_of(s: &SuperoperatorMatrix) -> ChoiMatrix {
    let d = s.hilbert_dim();
    let mut mat = CMat::zeros((d * d, d * d));
    for k in 0..d {
        for l in 0..d {
            let mut basis = CMat::zeros((d, d));
            basis[[k, l]] = C64::new(1.0, 0.0);
            let image = s.apply(&basis).expect("basis matrix has matching dims");
            for i in 0..d {
                for j in 0..d {
                    mat[[k * d + i, l * d + j]] = image[[i, j]];
                }
            }
        }
    }
    ChoiMatrix::new(d, mat).expect("dimensions consistent by construction")
}
