//! Small dense linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::scalar::Scalar;

/// Hermitian part `(m + m*) / 2`.
pub fn hermitian_part<S: Scalar>(m: &DMatrix<S>) -> DMatrix<S> {
    (m + m.adjoint()) * S::real_scalar(0.5)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn herm_eigen<S: Scalar>(m: &DMatrix<S>) -> (DVector<f64>, DMatrix<S>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vecs = DMatrix::<S>::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(k));
    }
    (vals, vecs)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn herm_apply<S: Scalar>(m: &DMatrix<S>, f: impl Fn(f64) -> f64) -> DMatrix<S> {
    let (vals, vecs) = herm_eigen(m);
    herm_from_eigen(&vals, &vecs, f)
}

/// Rebuilds `U f(Λ) U*`.
pub fn herm_from_eigen<S: Scalar>(vals: &DVector<f64>, vecs: &DMatrix<S>, f: impl Fn(f64) -> f64) -> DMatrix<S> {
    let n = vals.len();
    let mut scaled = vecs.clone();
    for j in 0..n {
        let fj = S::real_scalar(f(vals[j]));
        for i in 0..n {
            scaled[(i, j)] *= fj;
        }
    }
    scaled * vecs.adjoint()
}

/// Smallest eigenvalue of the Hermitian part (`+inf` for empty matrices).
pub fn min_eigenvalue<S: Scalar>(m: &DMatrix<S>) -> f64 {
    let (vals, _) = herm_eigen(m);
    vals.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Singular values in descending order.
pub fn singular_values<S: Scalar>(m: &DMatrix<S>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = SVD::new(m.clone(), false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm.
pub fn op_norm<S: Scalar>(m: &DMatrix<S>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Reciprocal condition number `s_min / s_max` of a square matrix.
pub fn rcond<S: Scalar>(m: &DMatrix<S>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let s = singular_values(m);
    let max = s[0];
    if max == 0.0 || s.len() < m.nrows().min(m.ncols()) {
        return 0.0;
    }
    s[s.len() - 1] / max
}

/// Orthonormal basis (as columns) of the column space, at relative tolerance `rtol`.
pub fn column_space<S: Scalar>(m: &DMatrix<S>, rtol: f64) -> DMatrix<S> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| smax > 0.0 && svd.singular_values[k] > rtol * smax)
        .collect();
    let mut basis = DMatrix::<S>::zeros(rows, keep.len());
    for (j, &k) in keep.iter().enumerate() {
        basis.set_column(j, &u.column(k));
    }
    basis
}

/// Extends orthonormal columns to an orthonormal basis of the whole space.
pub fn complete_orthonormal<S: Scalar>(q: &DMatrix<S>) -> DMatrix<S> {
    let n = q.nrows();
    let mut cols: Vec<DVector<S>> = q.column_iter().map(|c| c.into_owned()).collect();
    let mut k = 0;
    while cols.len() < n && k < n {
        let mut v = DVector::<S>::zeros(n);
        v[k] = S::one();
        // Two passes of Gram-Schmidt for stability.
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&v);
                v -= c * proj;
            }
        }
        let norm = v.norm();
        if norm > 0.5 {
            cols.push(v.unscale(norm));
        }
        k += 1;
    }
    DMatrix::from_columns(&cols)
}

/// Inverse of a Hermitian positive definite matrix via its spectrum.
pub fn spd_inverse<S: Scalar>(m: &DMatrix<S>) -> DMatrix<S> {
    herm_apply(m, |x| 1.0 / x)
}

/// Inverse of a general square matrix if it is well conditioned.
pub fn try_inverse<S: Scalar>(m: &DMatrix<S>, min_rcond: f64) -> Option<DMatrix<S>> {
    if m.nrows() == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    if rcond(m) <= min_rcond {
        return None;
    }
    m.clone().try_inverse()
}

/// Largest absolute entry.
pub fn max_abs<S: Scalar>(m: &DMatrix<S>) -> f64 {
    m.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}

/// Identity of size `n`.
pub fn eye<S: Scalar>(n: usize) -> DMatrix<S> {
    DMatrix::identity(n, n)
}

/// Matrix of zeros.
pub fn zeros<S: Scalar>(r: usize, c: usize) -> DMatrix<S> {
    DMatrix::from_element(r, c, S::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Complex;

    #[test]
    fn herm_apply_square_root_squares_back() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let r = herm_apply(&a, f64::sqrt);
        assert!((&r * &r - &a).norm() < 1e-12);
    }

    #[test]
    fn complete_orthonormal_gives_unitary() {
        let q = DMatrix::from_column_slice(3, 1, &[Complex::new(0.6, 0.0), Complex::new(0.0, 0.8), Complex::new(0.0, 0.0)]);
        let full = complete_orthonormal(&q);
        assert_eq!(full.shape(), (3, 3));
        assert!((full.adjoint() * &full - eye::<Complex<f64>>(3)).norm() < 1e-12);
    }

    #[test]
    fn rcond_detects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(rcond(&m) < 1e-12);
        assert!(try_inverse(&m, 1e-10).is_none());
    }
}
