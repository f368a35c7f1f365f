//! Eigenvalues of matrix polynomials and left null vectors.

use nalgebra::{DMatrix, RowDVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::polyalg::MatrixPoly;
use crate::tol::Tolerances;

/// Eigenvalue set of a regular square matrix polynomial.
///
/// A regular `n x n` polynomial of trimmed degree `d` has `n d` eigenvalues;
/// the finite ones are the roots of `det P[z]` and the rest lie at infinity.
#[derive(Debug, Clone)]
pub struct EigenSet {
    /// Finite eigenvalues, sorted by descending modulus.
    pub finite: Vec<Complex64>,
    /// Number of eigenvalues at infinity, `n d - deg det P`.
    pub infinite_count: usize,
    /// Left null vectors of `P[lambda_i]`, when they have been computed.
    pub left_vectors: Option<Vec<RowDVector<Complex64>>>,
}

impl EigenSet {
    /// Computes the left null vector of `P[lambda_i]` for every finite
    /// eigenvalue and stores them in `left_vectors`.
    pub fn attach_left_vectors(&mut self, p: &MatrixPoly, tol: &Tolerances) -> Result<()> {
        let vecs = self
            .finite
            .iter()
            .map(|&lam| left_nullvector(&p.eval(lam), tol))
            .collect::<Result<Vec<_>>>()?;
        self.left_vectors = Some(vecs);
        Ok(())
    }
}

/// Finite and infinite eigenvalues of a regular matrix polynomial.
///
/// The polynomial is linearized to the first-companion pencil `z E - F` and
/// the generalized problem is solved by a shift-invert reduction: for a shift
/// `s` with `F - s E` well conditioned, the eigenvalues of
/// `M = (F - s E)^-1 E` are `1 / (z - s)`, with `mu = 0` corresponding to
/// eigenvalues at infinity.  The number of finite eigenvalues is pinned by
/// the degree of `det P[z]`, so the `n d - r` smallest `|mu|` are discarded
/// as infinite and the rest mapped back.
pub fn polyeig(p: &MatrixPoly, tol: &Tolerances) -> Result<EigenSet> {
    if p.rows() != p.cols() {
        return Err(Error::DimensionMismatch("polyeig needs a square polynomial".into()));
    }
    let pt = p.trim();
    let n = pt.rows();
    let d = pt.degree();
    let det = pt.det_poly(tol)?;
    if det.iter().all(|&c| c == 0.0) {
        return Err(Error::NotRegular);
    }
    let r = det.len() - 1;
    if d == 0 || n == 0 {
        return Ok(EigenSet {
            finite: Vec::new(),
            infinite_count: 0,
            left_vectors: None,
        });
    }

    let nd = n * d;
    let (e, f) = companion_pencil(&pt);

    // Shift candidates; scaled variants cover polynomials whose eigenvalues
    // live far from the unit circle.
    let base = [
        0.0,
        1.0,
        -1.0,
        0.6180339887498949,
        -1.6180339887498949,
        2.718281828459045,
        -0.3141592653589793,
        3.7416573867739413,
        -5.385164807134504,
        11.045361017187261,
    ];
    let mut best: Option<(f64, f64, DMatrix<f64>)> = None;
    for &s in &base {
        let shifted = &f - &e * s;
        let sv = shifted.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if smax == 0.0 {
            continue;
        }
        let ratio = smin / smax;
        if best.as_ref().map_or(true, |(b, _, _)| ratio > *b) {
            if let Some(inv) = shifted.lu().try_inverse() {
                best = Some((ratio, s, inv * &e));
            }
        }
        if best.as_ref().map_or(false, |(b, _, _)| *b > 1e-3) {
            break;
        }
    }
    let (ratio, shift, m) = best.ok_or_else(|| {
        Error::Numerical("no usable shift for the companion pencil".into())
    })?;
    if ratio < 1e-14 {
        return Err(Error::Numerical(format!(
            "companion pencil nearly singular at every trial shift (best ratio {ratio:.2e})"
        )));
    }

    let mut mus: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    mus.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    let infinite_count = nd - r;
    let mut finite: Vec<Complex64> = mus[infinite_count..]
        .iter()
        .map(|mu| Complex64::new(shift, 0.0) + 1.0 / mu)
        .collect();
    finite.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    Ok(EigenSet {
        finite,
        infinite_count,
        left_vectors: None,
    })
}

/// First-companion linearization of `P[z]` to the pencil `z E - F`.
///
/// `E = diag(I, ..., I, A_d)`, `F` has identities on the first superdiagonal
/// block row and `-A_0 .. -A_{d-1}` along the last block row, so that
/// `det(z E - F) = det P[z]`.
fn companion_pencil(p: &MatrixPoly) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = p.rows();
    let d = p.degree();
    let nd = n * d;
    let mut e = DMatrix::identity(nd, nd);
    e.view_mut(((d - 1) * n, (d - 1) * n), (n, n))
        .copy_from(&p.coeff(d));
    let mut f = DMatrix::zeros(nd, nd);
    for k in 0..d - 1 {
        f.view_mut((k * n, (k + 1) * n), (n, n))
            .copy_from(&DMatrix::identity(n, n));
    }
    for k in 0..d {
        let mut block = f.view_mut(((d - 1) * n, k * n), (n, n));
        block.copy_from(&(-p.coeff(k)));
    }
    (e, f)
}

/// Unit-norm row vector `c` with `c M = 0`, from the singular triplet of the
/// smallest singular value.
///
/// The sign is fixed so that the first entry of nonnegligible magnitude is
/// positive real.  Fails with [`Error::FullRank`] when the smallest singular
/// value exceeds `tol.null_rank` times the largest.
pub fn left_nullvector(m: &DMatrix<Complex64>, tol: &Tolerances) -> Result<RowDVector<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("left_nullvector needs a square matrix".into()));
    }
    let n = m.nrows();
    let svd = m.clone().svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Numerical("svd did not return U".into()))?;
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv[n - 1];
    if smax > 0.0 && smin > tol.null_rank * smax {
        return Err(Error::FullRank(smin / smax));
    }
    // c = conj(u_min)^T  =>  c M = sigma_min v_min^H
    let mut c = RowDVector::from_iterator(n, u.column(n - 1).iter().map(|x| x.conj()));
    let idx = (0..n)
        .find(|&i| c[i].norm() > 1e-8)
        .unwrap_or(0);
    let phase = c[idx] / c[idx].norm();
    c /= phase;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn diagonal_pencil_eigenvalues() {
        let p = MatrixPoly::z_minus(&DMatrix::from_diagonal(&DVector::from_vec(vec![
            0.7, 0.7, 0.0,
        ])));
        let es = polyeig(&p, &tol()).unwrap();
        assert_eq!(es.infinite_count, 0);
        let mut mods: Vec<f64> = es.finite.iter().map(|z| z.norm()).collect();
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mods[0] - 0.0).abs() < 1e-10);
        assert!((mods[1] - 0.7).abs() < 1e-10);
        assert!((mods[2] - 0.7).abs() < 1e-10);
    }

    #[test]
    fn double_degree_identity_case() {
        // z^2 I - z I with n = 2: eigenvalues {1, 1, 0, 0}, none infinite
        let n = 2;
        let p = MatrixPoly::new(vec![
            DMatrix::zeros(n, n),
            -DMatrix::identity(n, n),
            DMatrix::identity(n, n),
        ])
        .unwrap();
        let es = polyeig(&p, &tol()).unwrap();
        assert_eq!(es.infinite_count, 0);
        assert_eq!(es.finite.len(), 4);
        let ones = es.finite.iter().filter(|z| (*z - Complex64::new(1.0, 0.0)).norm() < 1e-8).count();
        let zeros = es.finite.iter().filter(|z| z.norm() < 1e-8).count();
        assert_eq!((ones, zeros), (2, 2));
    }

    #[test]
    fn singular_leading_coefficient_gives_infinite_eigenvalues() {
        // z diag(1, 0) - I: det = (z - 1) * (-1), one finite eigenvalue at 1,
        // one at infinity
        let lead = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let p = MatrixPoly::new(vec![-DMatrix::identity(2, 2), lead]).unwrap();
        let es = polyeig(&p, &tol()).unwrap();
        assert_eq!(es.infinite_count, 1);
        assert_eq!(es.finite.len(), 1);
        assert!((es.finite[0] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn eigenvalue_count_matches_det_degree() {
        let p = MatrixPoly::new(vec![
            DMatrix::from_row_slice(2, 2, &[0.5, -0.1, 0.2, 0.9]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, -0.4]),
            DMatrix::from_row_slice(2, 2, &[0.2, 1.0, 0.1, 0.3]),
        ])
        .unwrap();
        let es = polyeig(&p, &tol()).unwrap();
        let det = p.det_poly(&tol()).unwrap();
        assert_eq!(es.finite.len(), det.len() - 1);
        assert_eq!(es.finite.len() + es.infinite_count, 2 * 2);
        // every reported finite eigenvalue annihilates P numerically
        let scale = p.max_magnitude();
        for z in &es.finite {
            let sv = p.eval(*z).svd(false, false).singular_values;
            assert!(sv.min() <= 1e-6 * scale, "sigma_min {} at {}", sv.min(), z);
        }
    }

    #[test]
    fn not_regular_reported() {
        let p = MatrixPoly::zero(2, 2);
        assert!(matches!(polyeig(&p, &tol()), Err(Error::NotRegular)));
    }

    #[test]
    fn left_nullvector_of_diag() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0])
            .map(|x| Complex64::new(x, 0.0));
        let c = left_nullvector(&m, &tol()).unwrap();
        assert!((c[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(c[1].norm() < 1e-12);
    }

    #[test]
    fn left_nullvector_rejects_full_rank() {
        let m = DMatrix::<f64>::identity(3, 3).map(|x| Complex64::new(x, 0.0));
        assert!(matches!(left_nullvector(&m, &tol()), Err(Error::FullRank(_))));
    }

    #[test]
    fn left_nullvector_annihilates_constructed_rank_deficient_matrix() {
        // assemble a rank-(n-1) complex matrix from random-ish factors
        let n = 4;
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        let vals = [
            (0.3, -0.1),
            (1.2, 0.4),
            (-0.7, 0.9),
            (0.05, -1.3),
            (0.8, 0.0),
            (-0.33, 0.21),
        ];
        let mut it = vals.iter().cycle();
        for r in 0..n - 1 {
            let u: Vec<Complex64> = (0..n)
                .map(|_| {
                    let &(re, im) = it.next().unwrap();
                    Complex64::new(re, im)
                })
                .collect();
            let v: Vec<Complex64> = (0..n)
                .map(|_| {
                    let &(re, im) = it.next().unwrap();
                    Complex64::new(re + 0.11 * r as f64, im - 0.07 * r as f64)
                })
                .collect();
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] += u[i] * v[j];
                }
            }
        }
        let c = left_nullvector(&a, &tol()).unwrap();
        let prod = &c * &a;
        let m_norm = a.map(|x| x.norm()).max();
        assert!(prod.iter().map(|x| x.norm()).fold(0.0, f64::max) <= 1e-10 * m_norm);
        assert!((c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
    }
}
