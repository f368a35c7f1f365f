//! Model records, structural builders, and admissibility checks.
//!
//! [`ModelCM`] is the workhorse one-lead model
//! `x_t = A x_{t-1} + Ahat xhat_{1,t} + B u_t`, `u_t = R u_{t-1} + w_t`;
//! [`GeneralModel`] covers arbitrary expectational leads and lags,
//! `sum_{i,j} A_ij xhat_{i,t-j} = B u_t`.  Admissibility is regularity of the
//! characteristic matrix polynomial; well-posedness (strict properness of its
//! inverse) guarantees a solution for every free parameter and makes the
//! forecasting mechanism realizable through feedback.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::polyalg::{MatrixPoly, Properness, RationalMatrix};
use crate::tol::Tolerances;

/// The constant-coefficient one-lead model
/// `x_t = A x_{t-1} + Ahat xhat_{1,t} + B u_t` with exogenous inputs
/// `u_t = R u_{t-1} + w_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCM {
    pub a: DMatrix<f64>,
    pub ahat: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl ModelCM {
    /// Validates dimensions, `Ahat != 0`, and regularity of the
    /// characteristic matrix; rejects the model otherwise.
    pub fn new(
        a: DMatrix<f64>,
        ahat: DMatrix<f64>,
        b: DMatrix<f64>,
        r: DMatrix<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || ahat.shape() != (n, n) {
            return Err(Error::DimensionMismatch("A and Ahat must be n x n".into()));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch("B must have n rows".into()));
        }
        let m = b.ncols();
        if r.shape() != (m, m) {
            return Err(Error::DimensionMismatch("R must be m x m".into()));
        }
        if ahat.amax() == 0.0 {
            return Err(Error::ZeroAhat);
        }
        let model = Self { a, ahat, b, r };
        if !model.char_matrix().is_regular(tol) {
            return Err(Error::NotRegular);
        }
        Ok(model)
    }

    /// Number of endogenous variables.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Number of exogenous inputs.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// The characteristic matrix polynomial `[z^2 Ahat - z I + A]`.
    pub fn char_matrix(&self) -> MatrixPoly {
        let n = self.n();
        MatrixPoly::new(vec![
            self.a.clone(),
            -DMatrix::identity(n, n),
            self.ahat.clone(),
        ])
        .expect("coefficients share dimensions")
    }
}

/// Initial conditions `x_{-1}`, `xhat_{1,-1}`, `u_{-1}`, formally treated as
/// constants.
#[derive(Debug, Clone, PartialEq)]
pub struct InitCond {
    pub x_prev: DVector<f64>,
    pub xhat_prev: DVector<f64>,
    pub u_prev: DVector<f64>,
}

impl InitCond {
    pub fn new(x_prev: DVector<f64>, xhat_prev: DVector<f64>, u_prev: DVector<f64>) -> Self {
        Self {
            x_prev,
            xhat_prev,
            u_prev,
        }
    }

    /// All-zero initial conditions for a model of the given sizes.
    pub fn zero(n: usize, m: usize) -> Self {
        Self {
            x_prev: DVector::zeros(n),
            xhat_prev: DVector::zeros(n),
            u_prev: DVector::zeros(m),
        }
    }

    pub fn matches(&self, model: &ModelCM) -> Result<()> {
        if self.x_prev.len() != model.n()
            || self.xhat_prev.len() != model.n()
            || self.u_prev.len() != model.m()
        {
            return Err(Error::DimensionMismatch(
                "initial condition lengths must match the model".into(),
            ));
        }
        Ok(())
    }
}

/// Law of the driving noise: zero-mean with the given covariance, drawn from
/// a seeded generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockSpec {
    pub covariance: DMatrix<f64>,
    pub seed: u64,
}

impl ShockSpec {
    /// Validates symmetry and positive semidefiniteness (eigenvalues at or
    /// above `-1e-12`).
    pub fn new(covariance: DMatrix<f64>, seed: u64) -> Result<Self> {
        if covariance.nrows() != covariance.ncols() {
            return Err(Error::DimensionMismatch("covariance must be square".into()));
        }
        if (covariance.clone() - covariance.transpose()).amax()
            > 1e-12 * covariance.amax().max(1.0)
        {
            return Err(Error::DimensionMismatch("covariance must be symmetric".into()));
        }
        let eigs = covariance.clone().symmetric_eigen().eigenvalues;
        if let Some(&lam) = eigs.iter().find(|&&l| l < -1e-12) {
            return Err(Error::CovarianceNotPsd(lam));
        }
        Ok(Self { covariance, seed })
    }

    /// Unit covariance.
    pub fn unit(m: usize, seed: u64) -> Self {
        Self {
            covariance: DMatrix::identity(m, m),
            seed,
        }
    }

    /// A square root `L` of the covariance with `L L^T = cov`, through the
    /// symmetric eigendecomposition (works for semidefinite matrices).
    pub fn factor(&self) -> DMatrix<f64> {
        let se = self.covariance.clone().symmetric_eigen();
        let sqrt = DVector::from_iterator(
            se.eigenvalues.len(),
            se.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()),
        );
        &se.eigenvectors * DMatrix::from_diagonal(&sqrt)
    }
}

/// The general model `sum_{i=0..h, j=0..l} A_ij xhat_{i,t-j} = B u_t` with
/// `A_00 = I`, where `xhat_{0,t-j} = x_{t-j}` and `xhat_{i,t-j}` for `i > 0`
/// is an `i`-step forecast dated `t-j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralModel {
    h: usize,
    l: usize,
    coeffs: BTreeMap<(usize, usize), DMatrix<f64>>,
    pub b: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl GeneralModel {
    /// Builds the model, requiring `A_00 = I` exactly and a regular `D[z]`.
    pub fn new(
        h: usize,
        l: usize,
        coeffs: BTreeMap<(usize, usize), DMatrix<f64>>,
        b: DMatrix<f64>,
        r: DMatrix<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = b.nrows();
        let m = b.ncols();
        if r.shape() != (m, m) {
            return Err(Error::DimensionMismatch("R must be m x m".into()));
        }
        for (&(i, j), c) in &coeffs {
            if i > h || j > l {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient A_{i}_{j} outside lead/lag range ({h},{l})"
                )));
            }
            if c.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient A_{i}_{j} must be n x n"
                )));
            }
        }
        match coeffs.get(&(0, 0)) {
            Some(a00) if *a00 == DMatrix::identity(n, n) => {}
            _ => {
                return Err(Error::DimensionMismatch(
                    "A_00 must be present and exactly the identity".into(),
                ))
            }
        }
        let gm = Self { h, l, coeffs, b, r };
        if !gm.d_poly().is_regular(tol) {
            return Err(Error::NotRegular);
        }
        Ok(gm)
    }

    /// Largest expectational lead.
    pub fn h(&self) -> usize {
        self.h
    }

    /// Largest lag.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Coefficient `A_ij` (zero when absent).
    pub fn coeff(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.coeffs
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.n(), self.n()))
    }

    pub fn coeffs(&self) -> &BTreeMap<(usize, usize), DMatrix<f64>> {
        &self.coeffs
    }

    /// The characteristic polynomial `D[z] = sum z^{i+l-j} A_ij`.
    pub fn d_poly(&self) -> MatrixPoly {
        let n = self.n();
        let mut coeffs = vec![DMatrix::zeros(n, n); self.h + self.l + 1];
        for (&(i, j), c) in &self.coeffs {
            coeffs[i + self.l - j] += c;
        }
        MatrixPoly::new(coeffs).expect("coefficients share dimensions")
    }

    /// Embeds a one-lead model as `A_00 = I`, `A_01 = -A`, `A_10 = -Ahat`
    /// with the same `B` and `R` (h = l = 1).
    pub fn from_model_cm(model: &ModelCM, tol: &Tolerances) -> Result<Self> {
        let n = model.n();
        let mut coeffs = BTreeMap::new();
        coeffs.insert((0, 0), DMatrix::identity(n, n));
        coeffs.insert((0, 1), -model.a.clone());
        coeffs.insert((1, 0), -model.ahat.clone());
        Self::new(1, 1, coeffs, model.b.clone(), model.r.clone(), tol)
    }
}

/// Structural parameters of the three-equation New Keynesian model
///
/// ```text
/// y_t  = yhat_{1,t} - tau (r_t - pihat_{1,t}) + g_t
/// pi_t = beta pihat_{1,t} + kappa (y_t - z_t)
/// r_t  = rho_r r_{t-1} + (1 - rho_r)(psi1 pi_t + psi2 (y_t - z_t)) + eps_r,t
/// ```
///
/// with AR(1) exogenous processes `g` and `z`.  `sign_fix` applies the
/// sign-corrected variant in which `tau` and `kappa` enter with flipped
/// signs, under which jointly active policy rules are stabilizing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NKParams {
    pub tau: f64,
    pub beta: f64,
    pub kappa: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub rho_r: f64,
    pub rho_g: f64,
    pub rho_z: f64,
    pub sign_fix: bool,
}

impl NKParams {
    /// The benchmark calibration.  `beta = 0.99`, `psi1 = 1.10`, and
    /// `rho_g = rho_z = 0.7` are quoted values; `tau`, `kappa`, `psi2`,
    /// `rho_r` are recovered from the published numeric matrices by inverting
    /// the structural assembly (they come out as exact rationals) and are
    /// derived, not quoted.
    pub fn benchmark() -> Self {
        Self {
            tau: 0.5,
            beta: 0.99,
            kappa: 0.5,
            psi1: 1.10,
            psi2: 0.25,
            rho_r: 0.5,
            rho_g: 0.7,
            rho_z: 0.7,
            sign_fix: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::DimensionMismatch("beta must lie in (0, 1]".into()));
        }
        for (name, rho) in [
            ("rho_r", self.rho_r),
            ("rho_g", self.rho_g),
            ("rho_z", self.rho_z),
        ] {
            if !(0.0..1.0).contains(&rho) {
                return Err(Error::DimensionMismatch(format!("{name} must lie in [0, 1)")));
            }
        }
        Ok(())
    }
}

/// True iff the characteristic matrix `[z^2 Ahat - z I + A]` is regular.
///
/// Always true for a constructed [`ModelCM`] (the constructor enforces it);
/// exposed for reporting.
pub fn check_regular(model: &ModelCM, tol: &Tolerances) -> bool {
    model.char_matrix().is_regular(tol)
}

/// Well-posedness: `[z^2 Ahat - z I + A]^-1` strictly proper.
///
/// The primary test is the resolvent-index criterion
/// `rank(Ahat) = rank(Ahat^2)` (under `w = 1/z` the pole order of
/// `[z Ahat - I]^-1` at infinity is the index of the zero eigenvalue of
/// `Ahat`).  It is cross-checked against the sampling-based properness
/// classification of the inverse characteristic matrix; disagreement is
/// reported as an error rather than silently resolved.
pub fn check_well_posed(model: &ModelCM, tol: &Tolerances) -> Result<bool> {
    let ahat2 = &model.ahat * &model.ahat;
    let rank_test =
        linalg::rank(&model.ahat, tol.wellposed_rank) == linalg::rank(&ahat2, tol.wellposed_rank);
    let inv_char =
        RationalMatrix::left_mfd(model.char_matrix(), MatrixPoly::identity(model.n()), tol)?;
    let sampling_test = inv_char.classify(tol)? == Properness::StrictlyProper;
    if rank_test != sampling_test {
        return Err(Error::AmbiguousWellPosedness {
            rank_test,
            sampling_test,
        });
    }
    Ok(rank_test)
}

/// Weak consistency of initial conditions:
/// `xhat_{1,-1} - A x_{-1} - B R u_{-1}` lies in the column span of `Ahat`.
pub fn check_weak_consistency(model: &ModelCM, ic: &InitCond, tol: &Tolerances) -> bool {
    if ic.matches(model).is_err() {
        return false;
    }
    let v = &ic.xhat_prev - &model.a * &ic.x_prev - &model.b * &model.r * &ic.u_prev;
    let basis = linalg::image_basis(&model.ahat, tol.image_rank);
    linalg::projection_residual(&basis, &v) <= tol.image_residual * (1.0 + v.norm())
}

/// Assembles the New Keynesian model into [`ModelCM`] form.
///
/// The structural system `Gamma0 x_t = Gamma1 x_{t-1} + Gamma_e xhat_{1,t}
/// + Gamma_u u_t` with `x = (y, pi, r)` and `u = (g, z, eps_r)` is normalized
/// by `Gamma0^-1`; `R = diag(rho_g, rho_z, 0)`.
pub fn build_nk(p: &NKParams, tol: &Tolerances) -> Result<ModelCM> {
    p.validate()?;
    let (tau, kappa) = if p.sign_fix {
        (-p.tau, -p.kappa)
    } else {
        (p.tau, p.kappa)
    };
    let p1 = (1.0 - p.rho_r) * p.psi1;
    let p2 = (1.0 - p.rho_r) * p.psi2;
    let gamma0 = DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0, 0.0, tau, //
            -kappa, 1.0, 0.0, //
            -p2, -p1, 1.0,
        ],
    );
    let mut gamma1 = DMatrix::zeros(3, 3);
    gamma1[(2, 2)] = p.rho_r;
    let gamma_e = DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0, tau, 0.0, //
            0.0, p.beta, 0.0, //
            0.0, 0.0, 0.0,
        ],
    );
    let gamma_u = DMatrix::from_row_slice(
        3,
        3,
        &[
            1.0, 0.0, 0.0, //
            0.0, -kappa, 0.0, //
            0.0, -p2, 1.0,
        ],
    );
    let inv = gamma0.lu().try_inverse().ok_or(Error::SingularStructure)?;
    let r = DMatrix::from_diagonal(&DVector::from_vec(vec![p.rho_g, p.rho_z, 0.0]));
    ModelCM::new(&inv * gamma1, &inv * gamma_e, &inv * gamma_u, r, tol)
}

/// Taylor's single-equation example
/// `phat_{2,t-1} = phat_{1,t-1} + delta1 p_t + u_t`, normalized so that
/// `A_00 = 1`:
/// `p_t + delta1^-1 phat_{1,t-1} - delta1^-1 phat_{2,t-1} = -delta1^-1 u_t`
/// (h = 2, l = 1, R = 0).
pub fn build_taylor(delta1: f64, tol: &Tolerances) -> Result<GeneralModel> {
    if delta1 == 0.0 {
        return Err(Error::ZeroDelta);
    }
    let inv = 1.0 / delta1;
    let mut coeffs = BTreeMap::new();
    coeffs.insert((0, 0), DMatrix::identity(1, 1));
    coeffs.insert((1, 1), DMatrix::from_element(1, 1, inv));
    coeffs.insert((2, 1), DMatrix::from_element(1, 1, -inv));
    GeneralModel::new(
        2,
        1,
        coeffs,
        DMatrix::from_element(1, 1, -inv),
        DMatrix::zeros(1, 1),
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::polyeig;
    use num_complex::Complex64;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn scalar_model_is_regular() {
        // a = 0.5, ahat = 1: z^2 - z + 0.5
        let m = ModelCM::new(
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
            &tol(),
        )
        .unwrap();
        assert!(check_regular(&m, &tol()));
    }

    #[test]
    fn zero_ahat_is_rejected() {
        let res = ModelCM::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            &tol(),
        );
        assert!(matches!(res, Err(Error::ZeroAhat)));
    }

    #[test]
    fn irregular_model_is_rejected() {
        // A = [[0,1],[0,0]], Ahat = [[0,0],[1,0]]: the second row of
        // [z^2 Ahat - z I + A] is -z times the first, so the determinant
        // vanishes identically
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let ahat = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let res = ModelCM::new(
            a,
            ahat,
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            &tol(),
        );
        assert!(matches!(res, Err(Error::NotRegular)));
    }

    #[test]
    fn nonsingular_ahat_is_well_posed() {
        let m = ModelCM::new(
            DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.1, 0.2]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 0.8]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
            &tol(),
        )
        .unwrap();
        assert!(check_well_posed(&m, &tol()).unwrap());
    }

    #[test]
    fn nilpotent_ahat_is_not_well_posed() {
        let m = ModelCM::new(
            DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.1, 0.2]),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
            &tol(),
        )
        .unwrap();
        assert!(!check_well_posed(&m, &tol()).unwrap());
    }

    #[test]
    fn benchmark_model_is_well_posed() {
        let m = build_nk(&NKParams::benchmark(), &tol()).unwrap();
        assert!(check_well_posed(&m, &tol()).unwrap());
    }

    #[test]
    fn zero_initial_conditions_are_weakly_consistent() {
        let m = build_nk(&NKParams::benchmark(), &tol()).unwrap();
        assert!(check_weak_consistency(&m, &InitCond::zero(3, 3), &tol()));
    }

    #[test]
    fn constructed_membership_is_weakly_consistent() {
        let m = build_nk(&NKParams::benchmark(), &tol()).unwrap();
        let x_prev = DVector::from_vec(vec![0.4, -0.7, 1.1]);
        let u_prev = DVector::from_vec(vec![0.2, 0.0, -0.5]);
        let v = DVector::from_vec(vec![1.3, -0.2, 0.8]);
        let xhat_prev = &m.ahat * v + &m.a * &x_prev + &m.b * &m.r * &u_prev;
        let ic = InitCond::new(x_prev, xhat_prev, u_prev);
        assert!(check_weak_consistency(&m, &ic, &tol()));
    }

    #[test]
    fn third_unit_vector_is_outside_the_forecast_image() {
        let m = build_nk(&NKParams::benchmark(), &tol()).unwrap();
        // decide membership of e3 by the SVD of Ahat, then check agreement
        let basis = linalg::image_basis(&m.ahat, tol().image_rank);
        let e3 = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let in_image = linalg::projection_residual(&basis, &e3) <= 1e-9 * 2.0;
        assert!(!in_image);
        let ic = InitCond::new(DVector::zeros(3), e3, DVector::zeros(3));
        assert!(!check_weak_consistency(&m, &ic, &tol()));
    }

    #[test]
    fn benchmark_matrices_match_published_fixture() {
        let m = build_nk(&NKParams::benchmark(), &tol()).unwrap();
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.0, 0.0, -0.2083333, //
                0.0, 0.0, -0.1041667, //
                0.0, 0.0, 0.4166667,
            ],
        );
        let ahat = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.8333333, 0.1897917, 0.0, //
                0.4166667, 1.0848958, 0.0, //
                0.3333333, 0.6204167, 0.0,
            ],
        );
        // entry (3,2) of the published B display reads +0.3333333; the
        // structural equations force -0.3333333, and the least-squares
        // quantities computed alongside the display require the negative
        // value, so the fixture pins the structurally consistent sign
        let b = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.8333333, 0.1666667, -0.4166667, //
                0.4166667, -0.4166667, -0.2083333, //
                0.3333333, -0.3333333, 0.8333333,
            ],
        );
        assert!((m.a - a).amax() < 1e-6);
        assert!((m.ahat - ahat).amax() < 1e-6);
        assert!((m.b - b).amax() < 1e-6);
        assert_eq!(m.r[(0, 0)], 0.7);
        assert_eq!(m.r[(1, 1)], 0.7);
        assert_eq!(m.r[(2, 2)], 0.0);
    }

    #[test]
    fn switched_off_policy_zeroes_third_forecast_row() {
        let p = NKParams {
            psi1: 0.0,
            psi2: 0.0,
            rho_r: 0.0,
            ..NKParams::benchmark()
        };
        let m = build_nk(&p, &tol()).unwrap();
        assert!(m.ahat.row(2).amax() < 1e-14);
        assert!((m.b.row(2) - DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0])).amax() < 1e-14);
    }

    #[test]
    fn sign_fixed_model_has_published_eigenvalues() {
        let p = NKParams {
            psi2: 1.50,
            sign_fix: true,
            ..NKParams::benchmark()
        };
        let m = build_nk(&p, &tol()).unwrap();
        let es = polyeig(&m.char_matrix(), &tol()).unwrap();
        let has = |target: Complex64, tol_abs: f64| {
            es.finite.iter().any(|z| (z - target).norm() < tol_abs)
        };
        assert!(has(Complex64::new(0.812, 0.0453), 5e-3), "{:?}", es.finite);
        assert!(has(Complex64::new(0.812, -0.0453), 5e-3));
        assert!(has(Complex64::new(0.763, 0.0), 5e-3));
    }

    #[test]
    fn taylor_model_normalization() {
        let gm = build_taylor(1.0, &tol()).unwrap();
        assert_eq!(gm.coeff(1, 1)[(0, 0)], 1.0);
        assert_eq!(gm.coeff(2, 1)[(0, 0)], -1.0);
        assert_eq!(gm.b[(0, 0)], -1.0);
        let gm2 = build_taylor(2.0, &tol()).unwrap();
        assert_eq!(gm2.b[(0, 0)], -0.5);
        assert!(matches!(build_taylor(0.0, &tol()), Err(Error::ZeroDelta)));
    }

    #[test]
    fn taylor_d_poly_is_regular_for_any_delta() {
        for delta in [0.5, 1.0, 2.0, -0.7, 11.0] {
            let gm = build_taylor(delta, &tol()).unwrap();
            assert!(gm.d_poly().is_regular(&tol()), "delta {delta}");
            // the nonzero eigenvalue of D[z] is Taylor's 1 + delta1
            let es = polyeig(&gm.d_poly(), &tol()).unwrap();
            let top = es.finite.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!((top - (1.0 + delta).abs()).abs() < 1e-10);
        }
    }

    #[test]
    fn general_model_requires_exact_identity() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert((0, 0), DMatrix::from_element(1, 1, 1.0 + 1e-15));
        let res = GeneralModel::new(
            1,
            0,
            coeffs,
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 1),
            &tol(),
        );
        assert!(res.is_err());
    }

    #[test]
    fn covariance_must_be_psd() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(ShockSpec::new(bad, 0), Err(Error::CovarianceNotPsd(_))));
        let ok = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let spec = ShockSpec::new(ok.clone(), 0).unwrap();
        let l = spec.factor();
        assert!((l.clone() * l.transpose() - ok).amax() < 1e-12);
    }
}
