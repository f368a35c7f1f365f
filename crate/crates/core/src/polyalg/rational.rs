//! Rational matrices in matrix-fraction form, properness classification, and
//! inverse z-transform expansion.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::polyalg::{polyeig, MatrixPoly};
use crate::tol::Tolerances;

/// Properness classification of a rational matrix.
///
/// Proper matrices are bounded as `|z| -> oo` and are exactly the transforms
/// of causal impulse responses; strictly proper ones vanish at infinity (the
/// identically zero matrix counts as strictly proper).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Properness {
    Improper,
    Proper,
    StrictlyProper,
}

/// A rational matrix in the fraction form `D1(z)^-1 N(z) D2(z)^-1` with
/// regular square denominators.
#[derive(Debug, Clone)]
pub struct RationalMatrix {
    left_den: MatrixPoly,
    num: MatrixPoly,
    right_den: MatrixPoly,
}

impl RationalMatrix {
    /// Builds `D1^-1 N D2^-1`, checking shapes and denominator regularity.
    pub fn new(
        left_den: MatrixPoly,
        num: MatrixPoly,
        right_den: MatrixPoly,
        tol: &Tolerances,
    ) -> Result<Self> {
        if left_den.rows() != left_den.cols() || right_den.rows() != right_den.cols() {
            return Err(Error::DimensionMismatch("denominators must be square".into()));
        }
        if left_den.cols() != num.rows() || num.cols() != right_den.rows() {
            return Err(Error::DimensionMismatch(
                "rational matrix dimensions must compose as (n x n)(n x m)(m x m)".into(),
            ));
        }
        if !left_den.is_regular(tol) || !right_den.is_regular(tol) {
            return Err(Error::NotRegular);
        }
        Ok(Self {
            left_den,
            num,
            right_den,
        })
    }

    /// Left matrix fraction `D^-1 N` (identity right denominator).
    pub fn left_mfd(den: MatrixPoly, num: MatrixPoly, tol: &Tolerances) -> Result<Self> {
        let m = num.cols();
        Self::new(den, num, MatrixPoly::identity(m), tol)
    }

    pub fn rows(&self) -> usize {
        self.num.rows()
    }

    pub fn cols(&self) -> usize {
        self.num.cols()
    }

    pub fn left_den(&self) -> &MatrixPoly {
        &self.left_den
    }

    pub fn num(&self) -> &MatrixPoly {
        &self.num
    }

    pub fn right_den(&self) -> &MatrixPoly {
        &self.right_den
    }

    /// Value at a complex point (solves against both denominators).
    pub fn eval(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let d1 = self.left_den.eval(z);
        let d2 = self.right_den.eval(z);
        let n = self.num.eval(z);
        let d1inv = d1
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Numerical(format!("left denominator singular at z = {z}")))?;
        let d2inv = d2
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Numerical(format!("right denominator singular at z = {z}")))?;
        Ok(d1inv * n * d2inv)
    }

    /// Largest modulus among the finite eigenvalues of both denominators.
    fn pole_radius(&self, tol: &Tolerances) -> Result<(f64, Vec<Complex64>)> {
        let mut poles = polyeig(&self.left_den, tol)?.finite;
        poles.extend(polyeig(&self.right_den, tol)?.finite);
        let sigma = poles.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok((sigma, poles))
    }

    /// Classifies the rational matrix as improper, proper, or strictly proper.
    ///
    /// The matrix is sampled at 8 angles on two radii `rho1 = 1e3 (1 + sigma)`
    /// and `rho2 = 10 rho1`, where `sigma` is the largest pole modulus, and a
    /// growth exponent is fitted per entry from the magnitude ratios.  An
    /// entry with exponent at or above `tol.improper_exponent` is improper;
    /// one with exponent at or below its negative (or with magnitudes below
    /// `tol.properness_eps` times the sampled gain at both radii) vanishes at
    /// infinity.  The classification is invariant under common scalar
    /// rescaling of numerator and denominators.
    pub fn classify(&self, tol: &Tolerances) -> Result<Properness> {
        let (sigma, poles) = self.pole_radius(tol)?;
        let rho1 = 1e3 * (1.0 + sigma);
        let rho2 = 10.0 * rho1;
        let angles = 8;
        'attempt: for attempt in 0..3 {
            let offset = 0.5 + 0.37 * attempt as f64;
            let sample_angles: Vec<f64> = (0..angles)
                .map(|j| 2.0 * std::f64::consts::PI * (j as f64 + offset) / angles as f64)
                .collect();
            for &rho in &[rho1, rho2] {
                for &theta in &sample_angles {
                    let z = Complex64::from_polar(rho, theta);
                    if poles.iter().any(|p| (z - p).norm() < tol.pole_collision) {
                        continue 'attempt;
                    }
                }
            }
            let mut m1 = DMatrix::zeros(self.rows(), self.cols());
            let mut m2 = DMatrix::zeros(self.rows(), self.cols());
            for &theta in &sample_angles {
                let h1 = self.eval(Complex64::from_polar(rho1, theta))?;
                let h2 = self.eval(Complex64::from_polar(rho2, theta))?;
                for i in 0..self.rows() {
                    for j in 0..self.cols() {
                        m1[(i, j)] = f64::max(m1[(i, j)], h1[(i, j)].norm());
                        m2[(i, j)] = f64::max(m2[(i, j)], h2[(i, j)].norm());
                    }
                }
            }
            let scale = f64::max(m1.amax(), m2.amax());
            if scale == 0.0 {
                return Ok(Properness::StrictlyProper);
            }
            let eps = tol.properness_eps * scale;
            let mut all_strict = true;
            for i in 0..self.rows() {
                for j in 0..self.cols() {
                    if m1[(i, j)] <= eps && m2[(i, j)] <= eps {
                        continue; // negligible entry: vanishes at infinity
                    }
                    let exponent = (m2[(i, j)] / m1[(i, j)].max(f64::MIN_POSITIVE)).log10();
                    if exponent >= tol.improper_exponent {
                        return Ok(Properness::Improper);
                    }
                    if exponent > -tol.improper_exponent {
                        all_strict = false;
                    }
                }
            }
            return Ok(if all_strict {
                Properness::StrictlyProper
            } else {
                Properness::Proper
            });
        }
        Err(Error::SamplePoleCollision(tol.pole_collision))
    }

    /// Like [`classify`](Self::classify) but reports the worst offending entry
    /// and its exponent, for diagnostics on improper input.
    pub(crate) fn worst_growth(&self, tol: &Tolerances) -> Result<(usize, usize, f64)> {
        let (sigma, _) = self.pole_radius(tol)?;
        let rho1 = 1e3 * (1.0 + sigma);
        let rho2 = 10.0 * rho1;
        let mut worst = (0, 0, f64::NEG_INFINITY);
        for j in 0..8 {
            let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / 8.0;
            let h1 = self.eval(Complex64::from_polar(rho1, theta))?;
            let h2 = self.eval(Complex64::from_polar(rho2, theta))?;
            for r in 0..self.rows() {
                for c in 0..self.cols() {
                    let e = (h2[(r, c)].norm() / h1[(r, c)].norm().max(f64::MIN_POSITIVE)).log10();
                    if e > worst.2 && h2[(r, c)].norm() > f64::MIN_POSITIVE {
                        worst = (r, c, e);
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Inverse z-transform coefficients for `t = 0..=T`.
    ///
    /// The matrix is realized as a state-space system and the Markov
    /// parameters `D, CB, CAB, ...` are read off; term 0 is nonzero only when
    /// the matrix is proper but not strictly proper.
    pub fn expand_impulse(&self, horizon: usize, tol: &Tolerances) -> Result<ImpulseSeq> {
        // one block beyond the worst-case order, so the Hankel window can
        // certify the rank even without any pole-zero cancellation
        let hint = self.rows() * self.left_den.trim().degree()
            + self.cols() * self.right_den.trim().degree()
            + 1;
        let ss = crate::realize::minimal_realization(self, hint, tol)?;
        Ok(crate::realize::ss_impulse(&ss, horizon))
    }
}

/// A finite stretch `t = 0..=T` of a matrix-valued impulse response; the
/// value is implicitly zero for negative `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSeq {
    terms: Vec<DMatrix<f64>>,
}

impl ImpulseSeq {
    pub fn new(terms: Vec<DMatrix<f64>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::DimensionMismatch("impulse sequence needs at least one term".into()));
        }
        let shape = terms[0].shape();
        if terms.iter().any(|m| m.shape() != shape) {
            return Err(Error::DimensionMismatch(
                "impulse sequence terms must share dimensions".into(),
            ));
        }
        Ok(Self { terms })
    }

    pub fn rows(&self) -> usize {
        self.terms[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.terms[0].ncols()
    }

    /// Number of stored terms (horizon + 1).
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Term at time `t` (must be stored).
    pub fn term(&self, t: usize) -> &DMatrix<f64> {
        &self.terms[t]
    }

    pub fn terms(&self) -> &[DMatrix<f64>] {
        &self.terms
    }

    /// Convolution with the matrix power sequence `R^t` on the right:
    /// `out_t = sum_s in_{t-s} R^s`.
    ///
    /// This is the time-domain counterpart of right-multiplying the transform
    /// by `[I - R z^-1]^-1`, and converts exogenous-input kernels into
    /// driving-noise kernels.
    pub fn convolve_matrix_powers(&self, r: &DMatrix<f64>) -> ImpulseSeq {
        let mut powers = Vec::with_capacity(self.len());
        let mut p = DMatrix::identity(r.nrows(), r.ncols());
        for _ in 0..self.len() {
            powers.push(p.clone());
            p = r * &p;
        }
        let terms = (0..self.len())
            .map(|t| {
                let mut acc = DMatrix::zeros(self.rows(), self.cols());
                for s in 0..=t {
                    acc += self.term(t - s) * &powers[s];
                }
                acc
            })
            .collect();
        ImpulseSeq { terms }
    }

    /// Largest absolute entry over all terms.
    pub fn max_magnitude(&self) -> f64 {
        self.terms.iter().map(|m| m.amax()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// `[I - R z^-1]^-1` written over a polynomial fraction:
    /// `(z I - R)^-1 z`.
    fn resolvent(r: &DMatrix<f64>) -> RationalMatrix {
        let n = r.nrows();
        let den = MatrixPoly::z_minus(r);
        let num = MatrixPoly::identity(n).shift(1);
        RationalMatrix::new(den, num, MatrixPoly::identity(n), &tol()).unwrap()
    }

    #[test]
    fn resolvent_is_proper_not_strictly() {
        let r = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.0, -0.3]);
        let rm = resolvent(&r);
        assert_eq!(rm.classify(&tol()).unwrap(), Properness::Proper);
    }

    #[test]
    fn nilpotent_forecast_denominator_is_improper() {
        // [z Ahat - I]^-1 with Ahat = [[0,1],[0,0]] has inverse [[-1,-z],[0,-1]]
        let ahat = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let den = MatrixPoly::new(vec![-DMatrix::identity(2, 2), ahat]).unwrap();
        let rm = RationalMatrix::left_mfd(den, MatrixPoly::identity(2), &tol()).unwrap();
        assert_eq!(rm.classify(&tol()).unwrap(), Properness::Improper);
    }

    #[test]
    fn scalar_strictly_proper() {
        // 1 / (z - 0.5)
        let den = MatrixPoly::new(vec![
            DMatrix::from_element(1, 1, -0.5),
            DMatrix::from_element(1, 1, 1.0),
        ])
        .unwrap();
        let rm = RationalMatrix::left_mfd(den, MatrixPoly::identity(1), &tol()).unwrap();
        assert_eq!(rm.classify(&tol()).unwrap(), Properness::StrictlyProper);
        let seq = rm.expand_impulse(4, &tol()).unwrap();
        let expect = [0.0, 1.0, 0.5, 0.25, 0.125];
        for (t, e) in expect.iter().enumerate() {
            assert!((seq.term(t)[(0, 0)] - e).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn zero_matrix_is_strictly_proper() {
        let den = MatrixPoly::z_minus(&DMatrix::from_element(1, 1, 0.3));
        let rm = RationalMatrix::left_mfd(den, MatrixPoly::zero(1, 1), &tol()).unwrap();
        assert_eq!(rm.classify(&tol()).unwrap(), Properness::StrictlyProper);
    }

    #[test]
    fn classification_invariant_under_common_scalar() {
        let r = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.0, -0.3]);
        let den = MatrixPoly::z_minus(&r);
        let num = MatrixPoly::identity(2).shift(1);
        for s in [1e-6, 1.0, 1e6] {
            let rm = RationalMatrix::new(
                den.scale(s),
                num.scale(s),
                MatrixPoly::identity(2).scale(s),
                &tol(),
            )
            .unwrap();
            assert_eq!(rm.classify(&tol()).unwrap(), Properness::Proper, "s={s}");
        }
    }

    #[test]
    fn resolvent_expands_to_matrix_powers() {
        let r = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.1, -0.3]);
        let rm = resolvent(&r);
        let seq = rm.expand_impulse(8, &tol()).unwrap();
        let mut p = DMatrix::identity(2, 2);
        for t in 0..=8 {
            assert!((seq.term(t) - &p).norm() < 1e-9, "t={t}");
            p = &r * p;
        }
    }

    #[test]
    fn convolve_with_powers_matches_transform_product() {
        // expand_impulse(D^-1 N) convolved with R^t equals the expansion of
        // D^-1 N (z I - R)^-1 z
        let r = DMatrix::from_row_slice(2, 2, &[0.4, 0.0, 0.2, -0.1]);
        let a = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.0, 0.6]);
        let den = MatrixPoly::z_minus(&a);
        let num = MatrixPoly::identity(2).shift(1);
        let plain = RationalMatrix::new(den.clone(), num.clone(), MatrixPoly::identity(2), &tol())
            .unwrap()
            .expand_impulse(10, &tol())
            .unwrap();
        let with_res = RationalMatrix::new(
            den,
            num.shift(1),
            MatrixPoly::z_minus(&r),
            &tol(),
        )
        .unwrap()
        .expand_impulse(10, &tol())
        .unwrap();
        let conv = plain.convolve_matrix_powers(&r);
        for t in 0..=10 {
            assert!((conv.term(t) - with_res.term(t)).norm() < 1e-9, "t={t}");
        }
    }
}
