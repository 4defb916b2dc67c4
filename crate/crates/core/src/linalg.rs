//! Small dense complex linear-algebra helpers built on `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{CMatrix, CVector, C64};

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            out.view_mut((i * br, j * bc), (br, bc))
                .zip_apply(b, |o, v| *o = s * v);
        }
    }
    out
}

/// Kronecker product of two column vectors.
pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, &s) in a.iter().enumerate() {
        out.rows_mut(i * b.len(), b.len())
            .zip_apply(b, |o, v| *o = s * v);
    }
    out
}

/// Column-stacking `vec{m}`.
pub fn vec_cols(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_cols`].
pub fn unvec(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

pub fn norm_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Orthonormal basis for the column span of `m`.
///
/// Keeps left singular vectors whose singular value exceeds
/// `rel_tol · σ_max`, ordered by decreasing singular value. A zero matrix
/// yields an empty (`rows × 0`) basis.
pub fn orthonormal_basis(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return CMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let smax = order.first().map_or(0.0, |&i| sv[i]);
    if smax <= 0.0 {
        return CMatrix::zeros(rows, 0);
    }
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| sv[i] > rel_tol * smax)
        .collect();
    CMatrix::from_fn(rows, keep.len(), |r, c| u[(r, keep[c])])
}

/// Singular values of `m`, in decreasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank: singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&smax) if smax > 0.0 => sv.iter().filter(|&&s| s > rel_tol * smax).count(),
        _ => 0,
    }
}

/// Eigen-decomposition of a Hermitian matrix, sorted by decreasing
/// eigenvalue.
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    // Symmetrise to wash out rounding before the solver sees it.
    let herm = (m + m.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(herm);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = CMatrix::from_fn(m.nrows(), n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Largest entry magnitude of `Bᴴ·B − I`.
pub fn orthonormality_deviation(basis: &CMatrix) -> f64 {
    let gram = basis.adjoint() * basis;
    let eye = CMatrix::identity(gram.nrows(), gram.ncols());
    (gram - eye).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry magnitude of `a − b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Embeds a real matrix into the complex field.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kron_small() {
        let a = CMatrix::from_row_slice(2, 1, &[c(1.0, 0.0), c(0.0, 1.0)]);
        let b = CMatrix::from_row_slice(1, 2, &[c(2.0, 0.0), c(3.0, 0.0)]);
        let k = kron(&a, &b);
        let expected =
            CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(3.0, 0.0), c(0.0, 2.0), c(0.0, 3.0)]);
        assert_eq!(k, expected);
        let kv = kron_vec(
            &CVector::from_column_slice(a.as_slice()),
            &CVector::from_column_slice(b.as_slice()),
        );
        assert_eq!(
            kv.as_slice(),
            &[c(2.0, 0.0), c(3.0, 0.0), c(0.0, 2.0), c(0.0, 3.0)]
        );
    }

    #[test]
    fn basis_of_rank_deficient_matrix() {
        let col = CVector::from_column_slice(&[c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)]);
        let m = CMatrix::from_columns(&[col.clone(), col.map(|z| z * c(0.0, 2.0))]);
        let b = orthonormal_basis(&m, 1e-8);
        assert_eq!(b.ncols(), 1);
        assert!(orthonormality_deviation(&b) < 1e-12);
        assert_eq!(numerical_rank(&m, 1e-8), 1);
        assert_eq!(orthonormal_basis(&CMatrix::zeros(3, 2), 1e-8).ncols(), 0);
    }

    #[test]
    fn eigen_sorted_descending() {
        let m =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, -2.0), c(0.0, 2.0), c(4.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&m);
        assert!(vals[0] >= vals[1]);
        let recon = &vecs * CMatrix::from_diagonal(&vals.map(|v| c(v, 0.0))) * vecs.adjoint();
        assert!(max_abs_diff(&recon, &m) < 1e-12);
    }
}
