//! Crate-internal dense linear-algebra helpers built on SVD.

use nalgebra::{DMatrix, DVector};

/// Numerical rank at a relative singular-value cutoff.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthonormal basis of the column span, as the columns of the returned
/// matrix.  Empty (n x 0) when the matrix is zero.
pub fn image_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd requested u");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let r = if smax == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > rel_tol * smax).count()
    };
    u.columns(0, r).into_owned()
}

/// Moore-Penrose pseudoinverse at a relative rank cutoff.
pub fn pinv(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let vt = svd.v_t.expect("svd requested v_t");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let mut sinv = DMatrix::zeros(vt.nrows(), u.ncols());
    for i in 0..sv.len() {
        if smax > 0.0 && sv[i] > rel_tol * smax {
            sinv[(i, i)] = 1.0 / sv[i];
        }
    }
    vt.transpose() * sinv * u.transpose()
}

/// Minimum-norm least-squares solution of `A x = b` via SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    pinv(a, rel_tol) * b
}

/// Orthonormal basis of the null space of `m`, as column vectors.
///
/// The matrix is padded with zero rows to square before the SVD so that the
/// full right singular basis is available (a thin SVD of a wide matrix does
/// not expose the null-space directions).
pub fn null_space_basis(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let n = m.ncols();
    let padded = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("svd requested v_t");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let rank = if smax == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > rel_tol * smax).count()
    };
    (rank..n).map(|i| vt.row(i).transpose()).collect()
}

/// Residual of projecting `v` onto the column span of `basis` (orthonormal
/// columns), i.e. `||v - basis basis^T v||`.
pub fn projection_residual(basis: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let proj = basis * (basis.transpose() * v);
    (v - proj).norm()
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_satisfies_penrose_identity() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 1.0, -1.0, 0.5]);
        let g = pinv(&m, 1e-12);
        let back = &m * &g * &m;
        assert!((back - &m).norm() < 1e-12);
    }

    #[test]
    fn rank_of_outer_product_is_one() {
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let v = DVector::from_vec(vec![0.5, -1.0]);
        let m = &u * v.transpose();
        assert_eq!(rank(&m, 1e-10), 1);
        assert_eq!(image_basis(&m, 1e-10).ncols(), 1);
    }

    #[test]
    fn projection_residual_zero_inside_span() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let basis = image_basis(&m, 1e-10);
        let v = DVector::from_vec(vec![3.0, -2.0, 0.0]);
        assert!(projection_residual(&basis, &v) < 1e-12);
        let w = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!((projection_residual(&basis, &w) - 1.0).abs() < 1e-12);
    }
}
