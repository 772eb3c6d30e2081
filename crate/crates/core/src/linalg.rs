//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Largest |entry| of `a - a^dagger`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitize(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(a.nrows(), a.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `exp(-i H t)` for Hermitian `H`, via eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(h);
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
    ));
    &vecs * phases * vecs.adjoint()
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    a.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Spectral norm.
pub fn op_norm(a: &CMatrix) -> f64 {
    singular_values(a).into_iter().fold(0.0, f64::max)
}

/// Schatten-1 norm.
pub fn trace_norm(a: &CMatrix) -> f64 {
    singular_values(a).into_iter().sum()
}

/// Unitary polar factor `W V^dagger` of `a = W S V^dagger`.
pub fn polar_unitary(a: &CMatrix) -> Result<CMatrix> {
    let svd = a.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(u * v_t),
        _ => Err(Error::numeric("SVD failed to produce singular vectors")),
    }
}

/// Eigenvalues and eigenvectors of a unitary (normal) matrix via complex Schur.
pub fn unitary_eigen(u: &CMatrix) -> Result<(Vec<Complex64>, CMatrix)> {
    let d = u.nrows();
    let defect = (u.adjoint() * u - identity(d)).norm();
    if defect > 1e-8 {
        return Err(Error::numeric(format!(
            "matrix is not unitary (|U^dag U - I|_F = {defect:.3e})"
        )));
    }
    let (q, t) = u.clone().schur().unpack();
    let off: f64 = (0..d)
        .flat_map(|r| (0..d).filter(move |&c| c != r).map(move |c| (r, c)))
        .map(|(r, c)| t[(r, c)].norm())
        .fold(0.0, f64::max);
    if off > 1e-7 {
        return Err(Error::numeric(format!(
            "Schur form of unitary is not diagonal (off-diagonal {off:.3e})"
        )));
    }
    Ok(((0..d).map(|k| t[(k, k)]).collect(), q))
}

/// Column-stacking vectorization: `vec(A)[i + d*j] = A[i, j]`.
pub fn vectorize(a: &CMatrix) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vectorize`] for a square `d x d` matrix.
pub fn unvectorize(v: &nalgebra::DVector<Complex64>, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// `min_phi |A - e^{i phi} B|_op`, evaluated at the phase aligning `Tr(B^dag A)`.
pub fn phase_aligned_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap = trace(&(b.adjoint() * a));
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    op_norm(&(a - b * phase))
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
