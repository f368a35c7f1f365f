//! Matrix polynomials and their determinant/adjugate machinery.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol::Tolerances;

/// A real matrix polynomial `A_0 + z A_1 + ... + z^d A_d`.
///
/// Coefficients are stored in ascending powers of `z`; all coefficient
/// matrices share the same dimensions.  Trailing all-zero coefficients are
/// permitted (the stored degree is simply the index of the last coefficient);
/// [`MatrixPoly::trim`] removes them.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPoly {
    coeffs: Vec<DMatrix<f64>>,
}

impl MatrixPoly {
    /// Builds a polynomial from coefficients in ascending powers of `z`.
    pub fn new(coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::DimensionMismatch(
                "matrix polynomial needs at least one coefficient".into(),
            ));
        }
        let (r, c) = coeffs[0].shape();
        if coeffs.iter().any(|m| m.shape() != (r, c)) {
            return Err(Error::DimensionMismatch(
                "matrix polynomial coefficients must share dimensions".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    /// The constant polynomial equal to `m`.
    pub fn constant(m: DMatrix<f64>) -> Self {
        Self { coeffs: vec![m] }
    }

    /// The constant identity polynomial of size `n`.
    pub fn identity(n: usize) -> Self {
        Self::constant(DMatrix::identity(n, n))
    }

    /// The zero polynomial of the given shape.
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self::constant(DMatrix::zeros(rows, cols))
    }

    /// The monic pencil `z I - m`.
    pub fn z_minus(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        Self {
            coeffs: vec![-m.clone(), DMatrix::identity(n, n)],
        }
    }

    pub fn rows(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.coeffs[0].ncols()
    }

    /// Stored degree (index of the last stored coefficient).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `z^k`, zero beyond the stored degree.
    pub fn coeff(&self, k: usize) -> DMatrix<f64> {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.rows(), self.cols()))
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    /// Largest absolute entry over all coefficients.
    pub fn max_magnitude(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|m| m.amax())
            .fold(0.0, f64::max)
    }

    /// Removes trailing coefficients whose entries are all below
    /// `1e-12 * max_magnitude`, keeping at least the constant term.
    pub fn trim(&self) -> Self {
        let floor = 1e-12 * self.max_magnitude();
        let mut last = 0;
        for (k, m) in self.coeffs.iter().enumerate() {
            if m.amax() > floor {
                last = k;
            }
        }
        Self {
            coeffs: self.coeffs[..=last].to_vec(),
        }
    }

    /// Evaluation at a complex point (Horner).
    pub fn eval(&self, z: Complex64) -> DMatrix<Complex64> {
        let mut acc = self.coeffs[self.degree()].map(|x| Complex64::new(x, 0.0));
        for k in (0..self.degree()).rev() {
            acc *= z;
            acc += self.coeffs[k].map(|x| Complex64::new(x, 0.0));
        }
        acc
    }

    /// Evaluation at a real point.
    pub fn eval_real(&self, x: f64) -> DMatrix<f64> {
        let mut acc = self.coeffs[self.degree()].clone();
        for k in (0..self.degree()).rev() {
            acc *= x;
            acc += &self.coeffs[k];
        }
        acc
    }

    /// Sum of two polynomials of equal shape.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::DimensionMismatch("polynomial addition".into()));
        }
        let d = self.degree().max(other.degree());
        let coeffs = (0..=d).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Ok(Self { coeffs })
    }

    /// Difference of two polynomials of equal shape.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Scalar multiple.
    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|m| m * s).collect(),
        }
    }

    /// Product of two polynomials (coefficient convolution).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch("polynomial product".into()));
        }
        let d = self.degree() + other.degree();
        let mut coeffs = vec![DMatrix::zeros(self.rows(), other.cols()); d + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Ok(Self { coeffs })
    }

    /// Multiply by the scalar polynomial with the given coefficients.
    pub fn mul_scalar_poly(&self, p: &[f64]) -> Self {
        let d = self.degree() + p.len().saturating_sub(1);
        let mut coeffs = vec![DMatrix::zeros(self.rows(), self.cols()); d + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, &b) in p.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self { coeffs }
    }

    /// Multiply by `z^k`.
    pub fn shift(&self, k: usize) -> Self {
        let mut coeffs = vec![DMatrix::zeros(self.rows(), self.cols()); k];
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }
    }

    /// Entrywise transpose, `P(z)^T`.
    pub fn transpose(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|m| m.transpose()).collect(),
        }
    }

    /// Coefficients of `det P[z]`, lowest power first.
    ///
    /// Computed by evaluating the determinant at `2 n d + 1` scaled roots of
    /// unity and fitting the coefficients by inverse DFT.  Coefficients below
    /// `tol.det_coeff_floor * max input magnitude` are snapped to zero before
    /// the degree is read off; the all-zero coefficient vector (identically
    /// zero determinant) is a valid return.
    pub fn det_poly(&self, tol: &Tolerances) -> Result<Vec<f64>> {
        if self.rows() != self.cols() {
            return Err(Error::DimensionMismatch("det_poly needs a square polynomial".into()));
        }
        let p = self.trim();
        let n = p.rows();
        if n == 0 {
            return Ok(vec![1.0]);
        }
        let scale = p.max_magnitude();
        if scale == 0.0 {
            return Ok(vec![0.0]);
        }
        let max_deg = n * p.degree();
        let k_samples = 2 * max_deg + 1;
        let values = sample_on_circle(k_samples, 1.0, |z| p.eval(z).determinant());
        let mut coeffs = interp_coeffs(&values, 1.0);
        coeffs.truncate(max_deg + 1);
        let floor = tol.det_coeff_floor * scale;
        for c in coeffs.iter_mut() {
            if c.abs() <= floor {
                *c = 0.0;
            }
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Ok(coeffs)
    }

    /// True iff `det P[z]` is not the zero polynomial.
    pub fn is_regular(&self, tol: &Tolerances) -> bool {
        match self.det_poly(tol) {
            Ok(c) => c.iter().any(|&x| x != 0.0),
            Err(_) => false,
        }
    }

    /// Adjugate polynomial matrix, `adj P[z] = det(P[z]) P[z]^-1`.
    ///
    /// Sampled at scaled roots of unity like [`MatrixPoly::det_poly`]; the
    /// sampling radius is bumped and the evaluation retried if a sample point
    /// happens to sit near an eigenvalue of `P`.
    pub fn adjugate(&self, tol: &Tolerances) -> Result<MatrixPoly> {
        if self.rows() != self.cols() {
            return Err(Error::DimensionMismatch("adjugate needs a square polynomial".into()));
        }
        let p = self.trim();
        let n = p.rows();
        if n == 0 {
            return Ok(MatrixPoly::identity(0));
        }
        if n == 1 {
            // adj of a 1x1 polynomial is the constant 1
            return Ok(MatrixPoly::identity(1));
        }
        if !p.is_regular(tol) {
            return Err(Error::NotRegular);
        }
        let max_deg = (n - 1) * p.degree();
        let k_samples = 2 * max_deg + 1;
        let mut radius = 1.0;
        'retry: for _ in 0..6 {
            let mut samples: Vec<DMatrix<Complex64>> = Vec::with_capacity(k_samples);
            for k in 0..k_samples {
                let theta = 2.0 * std::f64::consts::PI * (k as f64) / (k_samples as f64);
                let z = Complex64::from_polar(radius, theta);
                let pz = p.eval(z);
                let det = pz.determinant();
                let lu = pz.clone().lu();
                match lu.try_inverse() {
                    Some(inv) if det.norm() > 1e-280 => samples.push(inv * det),
                    _ => {
                        radius *= 1.37;
                        continue 'retry;
                    }
                }
            }
            let mut coeffs = vec![DMatrix::zeros(n, n); max_deg + 1];
            for i in 0..n {
                for j in 0..n {
                    let vals: Vec<Complex64> = samples.iter().map(|s| s[(i, j)]).collect();
                    let cs = interp_coeffs(&vals, radius);
                    for (k, c) in cs.iter().enumerate().take(max_deg + 1) {
                        coeffs[k][(i, j)] = *c;
                    }
                }
            }
            return MatrixPoly::new(coeffs);
        }
        Err(Error::Numerical("adjugate sampling kept hitting eigenvalues".into()))
    }
}

/// Evaluates `f` at `k` points spaced uniformly on the circle of the given
/// radius.
fn sample_on_circle<T>(k: usize, radius: f64, f: impl Fn(Complex64) -> T) -> Vec<T> {
    (0..k)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * (j as f64) / (k as f64);
            f(Complex64::from_polar(radius, theta))
        })
        .collect()
}

/// Inverse DFT fit: recovers real polynomial coefficients from values on the
/// circle of the given radius.  Exact when the true degree is below the
/// number of samples.
fn interp_coeffs(values: &[Complex64], radius: f64) -> Vec<f64> {
    let k = values.len();
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, v) in values.iter().enumerate() {
            let theta = -2.0 * std::f64::consts::PI * (j as f64) * (i as f64) / (k as f64);
            acc += v * Complex64::from_polar(1.0, theta);
        }
        out.push(acc.re / (k as f64) / radius.powi(j as i32));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn det_of_diagonal_pencil() {
        // z I - diag(0.7, 0.7, 0)  ->  z (z - 0.7)^2
        let p = MatrixPoly::z_minus(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            0.7, 0.7, 0.0,
        ])));
        let d = p.det_poly(&tol()).unwrap();
        // z^3 - 1.4 z^2 + 0.49 z
        let expect = [0.0, 0.49, -1.4, 1.0];
        assert_eq!(d.len(), 4);
        for (a, b) in d.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn det_of_scalar_poly_is_itself() {
        // [z^2 ahat - z + a] scalar
        let p = MatrixPoly::new(vec![
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
        ])
        .unwrap();
        let d = p.det_poly(&tol()).unwrap();
        assert_eq!(d.len(), 3);
        assert!((d[0] - 0.5).abs() < 1e-13);
        assert!((d[1] + 1.0).abs() < 1e-13);
        assert!((d[2] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn zero_polynomial_is_not_regular() {
        let p = MatrixPoly::zero(2, 2);
        assert!(!p.is_regular(&tol()));
        assert!(p.det_poly(&tol()).unwrap().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn monic_pencil_is_regular() {
        let r = DMatrix::from_row_slice(2, 2, &[0.3, 1.0, 0.0, -0.2]);
        assert!(MatrixPoly::z_minus(&r).is_regular(&tol()));
    }

    #[test]
    fn adjugate_times_original_is_det_identity() {
        let p = MatrixPoly::new(vec![
            DMatrix::from_row_slice(2, 2, &[0.5, -0.1, 0.2, 0.9]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, -0.4]),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.7, 0.2]),
        ])
        .unwrap();
        let adj = p.adjugate(&tol()).unwrap();
        let prod = adj.mul(&p).unwrap();
        let det = p.det_poly(&tol()).unwrap();
        // adj(P) P = det(P) I
        for k in 0..=prod.degree() {
            let want = if k < det.len() { det[k] } else { 0.0 };
            let got = prod.coeff(k);
            assert!((got[(0, 0)] - want).abs() < 1e-10);
            assert!((got[(1, 1)] - want).abs() < 1e-10);
            assert!(got[(0, 1)].abs() < 1e-10);
            assert!(got[(1, 0)].abs() < 1e-10);
        }
    }

    #[test]
    fn trim_drops_zero_tail() {
        let mut coeffs = vec![DMatrix::from_element(1, 1, 2.0)];
        coeffs.push(DMatrix::zeros(1, 1));
        coeffs.push(DMatrix::zeros(1, 1));
        let p = MatrixPoly::new(coeffs).unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.trim().degree(), 0);
    }
}
