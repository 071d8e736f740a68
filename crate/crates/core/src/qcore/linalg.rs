//! Dense complex linear algebra: Kronecker products, partial traces,
//! vectorization, matrix functions, and the state metrics used everywhere
//! else in the crate.
//!
//! Vectorization is column-stacking throughout: `vec(A rho B) =
//! (B^T (x) A) vec(rho)`, so superoperator composition is plain matrix
//! multiplication.

use ndarray::{Array1, Array2, s};
use ndarray_linalg::{Eig, Eigh, Inverse, OperationNorm, Solve, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

pub fn identity(d: usize) -> CMat {
    Array2::eye(d)
}

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_deviation(m: &CMat) -> f64 {
    max_abs(&(m - &dagger(m)))
}

/// Kronecker product with `a`'s indices outer (row-major blocks).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = CMat::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let block = b.mapv(|z| z * a[[i, j]]);
            out.slice_mut(s![i * rb..(i + 1) * rb, j * cb..(j + 1) * cb])
                .assign(&block);
        }
    }
    out
}

/// Column-stacking vectorization: entry `(i, j)` maps to index `j*d + i`.
pub fn vec_op(m: &CMat) -> CVec {
    let (r, c) = m.dim();
    let mut v = CVec::zeros(r * c);
    for j in 0..c {
        for i in 0..r {
            v[j * r + i] = m[[i, j]];
        }
    }
    v
}

/// Inverse of [`vec_op`] for square matrices of dimension `d`.
pub fn unvec_op(v: &CVec, d: usize) -> CMat {
    assert_eq!(v.len(), d * d, "vector length does not match d^2");
    let mut m = CMat::zeros((d, d));
    for j in 0..d {
        for i in 0..d {
            m[[i, j]] = v[j * d + i];
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of a matrix on `A (x) B` with local dimensions `(d_a, d_b)`.
pub fn partial_trace(m: &CMat, d_a: usize, d_b: usize, keep: Subsystem) -> Result<CMat> {
    let n = d_a * d_b;
    if m.dim() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "partial_trace: matrix is {:?}, expected {}x{}",
            m.dim(),
            n,
            n
        )));
    }
    match keep {
        Subsystem::A => {
            let mut out = CMat::zeros((d_a, d_a));
            for a in 0..d_a {
                for a2 in 0..d_a {
                    let mut acc = C64::new(0.0, 0.0);
                    for b in 0..d_b {
                        acc += m[[a * d_b + b, a2 * d_b + b]];
                    }
                    out[[a, a2]] = acc;
                }
            }
            Ok(out)
        }
        Subsystem::B => {
            let mut out = CMat::zeros((d_b, d_b));
            for b in 0..d_b {
                for b2 in 0..d_b {
                    let mut acc = C64::new(0.0, 0.0);
                    for a in 0..d_a {
                        acc += m[[a * d_b + b, a * d_b + b2]];
                    }
                    out[[b, b2]] = acc;
                }
            }
            Ok(out)
        }
    }
}

pub fn trace(m: &CMat) -> C64 {
    m.diag().sum()
}

/// Smallest eigenvalue of a Hermitian matrix. The input is symmetrized as
/// `(M + M^dagger)/2` before solving; deviations beyond 1e-9 are an error.
pub fn min_eigenvalue_hermitian(m: &CMat) -> Result<f64> {
    let dev = hermiticity_deviation(m);
    if dev > 1e-9 {
        return Err(Error::NotHermitian(dev));
    }
    let sym = (m + &dagger(m)).mapv(|z| z * 0.5);
    let vals = sym.eigh(UPLO::Lower)?.0;
    Ok(vals.iter().cloned().fold(f64::INFINITY, f64::min))
}

pub fn eigvalsh(m: &CMat) -> Result<Array1<f64>> {
    let sym = (m + &dagger(m)).mapv(|z| z * 0.5);
    Ok(sym.eigh(UPLO::Lower)?.0)
}

/// General (non-symmetric) dense eigendecomposition: eigenvalues and the
/// matrix of right eigenvectors as columns.
pub fn eig_general(m: &CMat) -> Result<(CVec, CMat)> {
    Ok(m.eig()?)
}

/// 2-norm condition number via singular values.
pub fn condition_number(m: &CMat) -> Result<f64> {
    use ndarray_linalg::SVD;
    let (_, sv, _) = m.svd(false, false)?;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if smin == 0.0 { f64::INFINITY } else { smax / smin })
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    Ok(m.inv()?)
}

pub fn determinant(m: &CMat) -> Result<C64> {
    use ndarray_linalg::Determinant;
    Ok(m.det()?)
}

/// Matrix exponential by scaling-and-squaring with the degree-13 Pade
/// approximant (Higham 2005).
pub fn expm(a: &CMat) -> Result<CMat> {
    const THETA_13: f64 = 5.371920351148152;
    #[rustfmt::skip]
    const B: [f64; 14] = [
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ];
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch("expm: matrix not square".into()));
    }
    let norm1 = a.opnorm_one()?;
    let s = if norm1 > THETA_13 {
        (norm1 / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scale = C64::new(2f64.powi(-s), 0.0);
    let a = a.mapv(|z| z * scale);

    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let eye = identity(n);

    let u_inner = a6.mapv(|z| z * B[13]) + a4.mapv(|z| z * B[11]) + a2.mapv(|z| z * B[9]);
    let u = a.dot(
        &(a6.dot(&u_inner)
            + a6.mapv(|z| z * B[7])
            + a4.mapv(|z| z * B[5])
            + a2.mapv(|z| z * B[3])
            + eye.mapv(|z| z * B[1])),
    );
    let v_inner = a6.mapv(|z| z * B[12]) + a4.mapv(|z| z * B[10]) + a2.mapv(|z| z * B[8]);
    let v = a6.dot(&v_inner)
        + a6.mapv(|z| z * B[6])
        + a4.mapv(|z| z * B[4])
        + a2.mapv(|z| z * B[2])
        + eye.mapv(|z| z * B[0]);

    // (V - U) X = (V + U), column by column.
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut x = CMat::zeros((n, n));
    for j in 0..n {
        let col = lhs.solve(&rhs.column(j).to_owned())?;
        x.column_mut(j).assign(&col);
    }
    for _ in 0..s {
        x = x.dot(&x);
    }
    Ok(x)
}

/// Apply a scalar function to a diagonalizable matrix through its
/// eigendecomposition: `f(M) = V f(Lambda) V^-1`.
fn funm(m: &CMat, f: impl Fn(C64) -> C64, cond_limit: f64) -> Result<CMat> {
    let (vals, vecs) = eig_general(m)?;
    let cond = condition_number(&vecs)?;
    if !cond.is_finite() || cond > cond_limit {
        return Err(Error::IllConditionedEigenbasis(cond));
    }
    let vinv = inverse(&vecs)?;
    let n = m.nrows();
    let mut diag = CMat::zeros((n, n));
    for (i, &l) in vals.iter().enumerate() {
        diag[[i, i]] = f(l);
    }
    Ok(vecs.dot(&diag).dot(&vinv))
}

/// Principal matrix logarithm of a diagonalizable matrix. Eigenvalues on the
/// closed negative real axis are rejected (branch cut).
pub fn logm(m: &CMat) -> Result<CMat> {
    let (vals, _) = eig_general(m)?;
    for &l in vals.iter() {
        if l.norm() < 1e-14 || (l.re <= 0.0 && l.im.abs() < 1e-14 * l.norm().max(1.0)) {
            return Err(Error::LogBranchCut(l));
        }
    }
    funm(m, |z| z.ln(), 1e8)
}

/// Matrix square root of a diagonalizable matrix (principal branch).
pub fn sqrtm(m: &CMat) -> Result<CMat> {
    let (vals, _) = eig_general(m)?;
    for &l in vals.iter() {
        if l.re < 0.0 && l.im.abs() < 1e-14 * l.norm().max(1.0) {
            return Err(Error::LogBranchCut(l));
        }
    }
    funm(m, |z| z.sqrt(), 1e8)
}

/// Square root of a Hermitian positive-semidefinite matrix. Eigenvalues in
/// `(-1e-10, 0)` are clipped to zero; more negative values are an error.
pub fn sqrtm_psd(m: &CMat) -> Result<CMat> {
    let dev = hermiticity_deviation(m);
    if dev > 1e-8 {
        return Err(Error::NotHermitian(dev));
    }
    let sym = (m + &dagger(m)).mapv(|z| z * 0.5);
    let (vals, vecs) = sym.eigh(UPLO::Lower)?;
    let n = m.nrows();
    let mut out = CMat::zeros((n, n));
    for k in 0..n {
        let v = vals[k];
        let r = if v >= 0.0 {
            v.sqrt()
        } else if v > -1e-10 {
            0.0
        } else {
            return Err(Error::NotPositive(v));
        };
        let col = vecs.column(k);
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] += col[i] * col[j].conj() * r;
            }
        }
    }
    Ok(out)
}

/// Trace distance `(1/2)||rho - sigma||_1` via singular values.
pub fn trace_distance(rho: &CMat, sigma: &CMat) -> Result<f64> {
    use ndarray_linalg::SVD;
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(
            "trace_distance: operands differ in shape".into(),
        ));
    }
    let diff = rho - sigma;
    let (_, sv, _) = diff.svd(false, false)?;
    Ok(0.5 * sv.sum())
}

/// Uhlmann fidelity `F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity(rho: &CMat, sigma: &CMat) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(
            "fidelity: operands differ in shape".into(),
        ));
    }
    let sr = sqrtm_psd(rho)?;
    let inner = sr.dot(sigma).dot(&sr);
    let vals = eigvalsh(&inner)?;
    let mut root_sum = 0.0;
    for &v in vals.iter() {
        if v >= 0.0 {
            root_sum += v.sqrt();
        } else if v <= -1e-10 {
            return Err(Error::NotPositive(v));
        }
    }
    Ok((root_sum * root_sum).min(1.0))
}
