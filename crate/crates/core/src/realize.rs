//! Minimal state-space realization of proper rational matrices and
//! deterministic simulation of the realized systems.
//!
//! Realization is the Ho-Kalman construction: Markov parameters of the
//! fraction are computed exactly through a block-companion auxiliary system
//! built on the scalar-denominator form `adj(D1) N adj(D2) / (det D1 det D2)`,
//! a block Hankel matrix is assembled from them, and its SVD yields a
//! balanced realization whose order is the numerical Hankel rank.  Rank-based
//! order detection is what exposes pole-zero cancellation: a cancelled mode
//! simply never shows up in the Hankel matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::polyalg::{ImpulseSeq, Properness, RationalMatrix};
use crate::tol::Tolerances;

/// A discrete-time state-space system
/// `x_{t+1} = A x_t + B u_t`, `y_t = C x_t + D u_t`.
///
/// Order zero (empty `A`) means pure feedthrough.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let k = a.nrows();
        if a.ncols() != k || b.nrows() != k || c.ncols() != k {
            return Err(Error::DimensionMismatch("state-space A/B/C shapes".into()));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch("state-space D shape".into()));
        }
        Ok(Self { a, b, c, d })
    }

    /// State dimension.
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Eigenvalues of the state matrix.
    pub fn poles(&self) -> Vec<Complex64> {
        if self.order() == 0 {
            return Vec::new();
        }
        self.a.complex_eigenvalues().iter().copied().collect()
    }

    /// Largest pole modulus (zero for a pure feedthrough).
    pub fn spectral_radius(&self) -> f64 {
        self.poles().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Scalar polynomial product.
fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Markov parameters `h_0 .. h_{count-1}` of a proper rational matrix.
///
/// The fraction is rewritten over the scalar denominator
/// `delta = det(D1) det(D2)` with polynomial numerator
/// `P = adj(D1) N adj(D2)`; a block-companion state space realizing
/// `P / delta` then delivers the parameters as `D, CB, CAB, ...`.  The
/// leading coefficient of `delta` is a nonzero scalar even when the matrix
/// denominators have singular leading coefficients, which is what makes this
/// route work for the characteristic matrices of forecast models.
pub(crate) fn markov_params(
    rm: &RationalMatrix,
    count: usize,
    tol: &Tolerances,
) -> Result<Vec<DMatrix<f64>>> {
    let d1 = rm.left_den().trim();
    let d2 = rm.right_den().trim();
    let delta = conv(&d1.det_poly(tol)?, &d2.det_poly(tol)?);
    if delta.iter().all(|&c| c == 0.0) {
        return Err(Error::NotRegular);
    }
    let adj1 = d1.adjugate(tol)?;
    let adj2 = d2.adjugate(tol)?;
    let p = adj1.mul(rm.num())?.mul(&adj2)?;

    let q = delta.len() - 1;
    let lead = delta[q];
    let delta: Vec<f64> = delta.iter().map(|c| c / lead).collect();
    let p = p.scale(1.0 / lead);

    let (n, m) = (p.rows(), p.cols());
    // For a proper fraction the numerator degree cannot exceed q even before
    // cancellation; anything above is roundoff.
    let p_scale = p.max_magnitude().max(1e-300);
    for k in q + 1..=p.degree() {
        if p.coeff(k).amax() > 1e-6 * p_scale {
            let (r, c, e) = rm.worst_growth(tol)?;
            return Err(Error::ImproperInput {
                row: r,
                col: c,
                exponent: e,
            });
        }
    }

    let feedthrough = p.coeff(q);
    if q == 0 {
        let mut out = vec![DMatrix::zeros(n, m); count];
        if count > 0 {
            out[0] = feedthrough;
        }
        return Ok(out);
    }

    // Strictly proper residual Gamma(z) = P(z) - H_inf delta(z), degree < q.
    let gammas: Vec<DMatrix<f64>> = (0..q).map(|k| p.coeff(k) - &feedthrough * delta[k]).collect();

    // Block controller-companion realization of Gamma(z) / delta(z).
    let dim = q * m;
    let mut a = DMatrix::zeros(dim, dim);
    for k in 0..q - 1 {
        a.view_mut((k * m, (k + 1) * m), (m, m))
            .copy_from(&DMatrix::identity(m, m));
    }
    for k in 0..q {
        let mut block = a.view_mut(((q - 1) * m, k * m), (m, m));
        block.copy_from(&(DMatrix::identity(m, m) * (-delta[k])));
    }
    let mut b = DMatrix::zeros(dim, m);
    b.view_mut(((q - 1) * m, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
    let mut c = DMatrix::zeros(n, dim);
    for (k, g) in gammas.iter().enumerate() {
        c.view_mut((0, k * m), (n, m)).copy_from(g);
    }

    let mut out = Vec::with_capacity(count);
    if count > 0 {
        out.push(feedthrough);
    }
    let mut state = b;
    for _ in 1..count {
        out.push(&c * &state);
        state = &a * state;
    }
    Ok(out)
}

/// Ho-Kalman balanced realization from Markov parameters `h_0 .. h_{2N}`.
///
/// The order is the numerical rank of the `N x N` block Hankel matrix of
/// `h_1 .. h_{2N-1}` at the relative cutoff `tol.hankel_rank`.
pub fn realize_markov(markov: &[DMatrix<f64>], blocks: usize, tol: &Tolerances) -> Result<StateSpace> {
    if markov.len() < 2 * blocks + 1 {
        return Err(Error::DimensionMismatch(format!(
            "need at least {} Markov parameters for {} Hankel blocks",
            2 * blocks + 1,
            blocks
        )));
    }
    let (n, m) = markov[0].shape();
    let mut h0 = DMatrix::zeros(blocks * n, blocks * m);
    let mut h1 = DMatrix::zeros(blocks * n, blocks * m);
    for i in 0..blocks {
        for j in 0..blocks {
            h0.view_mut((i * n, j * m), (n, m)).copy_from(&markov[i + j + 1]);
            h1.view_mut((i * n, j * m), (n, m)).copy_from(&markov[i + j + 2]);
        }
    }
    let svd = h0.svd(true, true);
    let u = svd.u.expect("svd requested u");
    let vt = svd.v_t.expect("svd requested v_t");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let k = if smax == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > tol.hankel_rank * smax).count()
    };
    if k == usize::min(blocks * n, blocks * m) && k > 0 {
        return Err(Error::HintTooSmall(blocks));
    }
    if k == 0 {
        return StateSpace::new(
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, m),
            DMatrix::zeros(n, 0),
            markov[0].clone(),
        );
    }
    let uk = u.columns(0, k);
    let vtk = vt.rows(0, k);
    let s_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(k, (0..k).map(|i| sv[i].sqrt())));
    let s_isqrt =
        DMatrix::from_diagonal(&DVector::from_iterator(k, (0..k).map(|i| 1.0 / sv[i].sqrt())));
    let a = &s_isqrt * uk.transpose() * &h1 * vtk.transpose() * &s_isqrt;
    let ctr = &s_sqrt * vtk; // k x (blocks m)
    let obs = uk * &s_sqrt; // (blocks n) x k
    let b = ctr.columns(0, m).into_owned();
    let c = obs.rows(0, n).into_owned();
    StateSpace::new(a, b, c, markov[0].clone())
}

/// Minimal state-space realization of a proper rational matrix.
///
/// `hint` bounds the suspected order; it must be at least
/// `n deg(D1) + m deg(D2)` so that the Hankel window can certify the rank.
/// The realized Markov parameters match the fraction's expansion for
/// `t = 0 ..= 2 hint + 2`.
pub fn minimal_realization(
    rm: &RationalMatrix,
    hint: usize,
    tol: &Tolerances,
) -> Result<StateSpace> {
    if rm.classify(tol)? == Properness::Improper {
        let (r, c, e) = rm.worst_growth(tol)?;
        return Err(Error::ImproperInput {
            row: r,
            col: c,
            exponent: e,
        });
    }
    let markov = markov_params(rm, 2 * hint + 3, tol)?;
    realize_markov(&markov, hint, tol)
}

/// Impulse response of a state-space system: `D, CB, CAB, ...` for
/// `t = 0..=T`.
pub fn ss_impulse(ss: &StateSpace, horizon: usize) -> ImpulseSeq {
    let mut terms = Vec::with_capacity(horizon + 1);
    terms.push(ss.d.clone());
    let mut state = ss.b.clone();
    for _ in 1..=horizon {
        terms.push(&ss.c * &state);
        state = &ss.a * state;
    }
    ImpulseSeq::new(terms).expect("impulse terms share dimensions")
}

/// Deterministic simulation: `x_{t+1} = A x_t + B u_t`, `y_t = C x_t + D u_t`.
pub fn ss_simulate(
    ss: &StateSpace,
    inputs: &[DVector<f64>],
    x0: &DVector<f64>,
) -> Result<Vec<DVector<f64>>> {
    if x0.len() != ss.order() {
        return Err(Error::DimensionMismatch("initial state length".into()));
    }
    if inputs.iter().any(|u| u.len() != ss.inputs()) {
        return Err(Error::DimensionMismatch("input vector length".into()));
    }
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(inputs.len());
    for u in inputs {
        out.push(&ss.c * &x + &ss.d * u);
        x = &ss.a * &x + &ss.b * u;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::MatrixPoly;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn scalar_lag_half() -> RationalMatrix {
        // 1 / (z - 0.5)
        let den = MatrixPoly::new(vec![
            DMatrix::from_element(1, 1, -0.5),
            DMatrix::from_element(1, 1, 1.0),
        ])
        .unwrap();
        RationalMatrix::left_mfd(den, MatrixPoly::identity(1), &tol()).unwrap()
    }

    #[test]
    fn scalar_pole_realizes_first_order() {
        let ss = minimal_realization(&scalar_lag_half(), 2, &tol()).unwrap();
        assert_eq!(ss.order(), 1);
        assert!((ss.a[(0, 0)] - 0.5).abs() < 1e-10);
        assert!(ss.d[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn impulse_of_simple_system() {
        let ss = StateSpace::new(
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.0),
        )
        .unwrap();
        let seq = ss_impulse(&ss, 3);
        let expect = [0.0, 1.0, 0.5, 0.25];
        for (t, e) in expect.iter().enumerate() {
            assert_eq!(seq.term(t)[(0, 0)], *e);
        }
    }

    #[test]
    fn feedthrough_only_system() {
        let d = DMatrix::from_row_slice(2, 1, &[3.0, -1.0]);
        let ss = StateSpace::new(
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, 1),
            DMatrix::zeros(2, 0),
            d.clone(),
        )
        .unwrap();
        let seq = ss_impulse(&ss, 2);
        assert_eq!(seq.term(0), &d);
        assert_eq!(seq.term(1).amax(), 0.0);
        assert_eq!(seq.term(2).amax(), 0.0);
    }

    #[test]
    fn unit_impulse_simulation_matches_impulse() {
        let ss = StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[0.3, 1.0, 0.0, -0.2]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.5]),
            DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            DMatrix::from_element(1, 1, 0.7),
        )
        .unwrap();
        let mut inputs = vec![DVector::from_element(1, 0.0); 6];
        inputs[0][0] = 1.0;
        let ys = ss_simulate(&ss, &inputs, &DVector::zeros(2)).unwrap();
        let seq = ss_impulse(&ss, 5);
        for t in 0..6 {
            assert!((ys[t][0] - seq.term(t)[(0, 0)]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_input_zero_state_gives_zero_output() {
        let ss = StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[0.3, 1.0, 0.0, -0.2]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.5]),
            DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            DMatrix::from_element(1, 1, 0.7),
        )
        .unwrap();
        let inputs = vec![DVector::from_element(1, 0.0); 4];
        let ys = ss_simulate(&ss, &inputs, &DVector::zeros(2)).unwrap();
        assert!(ys.iter().all(|y| y.amax() == 0.0));
    }

    #[test]
    fn simulation_is_linear_in_the_input() {
        let ss = StateSpace::new(
            DMatrix::from_row_slice(2, 2, &[0.1, 0.4, -0.3, 0.8]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.2, -1.0]),
            DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 1.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.1, -0.2, 0.0]),
        )
        .unwrap();
        let u1: Vec<DVector<f64>> = (0..8)
            .map(|t| DVector::from_vec(vec![(t as f64 * 0.37).sin(), 0.5 - t as f64 * 0.1]))
            .collect();
        let u2: Vec<DVector<f64>> = (0..8)
            .map(|t| DVector::from_vec(vec![0.2 * t as f64, (t as f64).cos()]))
            .collect();
        let sum: Vec<DVector<f64>> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let x0 = DVector::zeros(2);
        let y1 = ss_simulate(&ss, &u1, &x0).unwrap();
        let y2 = ss_simulate(&ss, &u2, &x0).unwrap();
        let ysum = ss_simulate(&ss, &sum, &x0).unwrap();
        for t in 0..8 {
            assert!(((&y1[t] + &y2[t]) - &ysum[t]).amax() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let ss = StateSpace::new(
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.0),
        )
        .unwrap();
        let bad = vec![DVector::from_vec(vec![1.0, 2.0])];
        assert!(matches!(
            ss_simulate(&ss, &bad, &DVector::zeros(1)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn reralization_preserves_order() {
        let rm = scalar_lag_half();
        let ss = minimal_realization(&rm, 2, &tol()).unwrap();
        let markov: Vec<DMatrix<f64>> = ss_impulse(&ss, 2 * 2 + 2).terms().to_vec();
        let again = realize_markov(&markov, 2, &tol()).unwrap();
        assert_eq!(again.order(), ss.order());
    }
}
