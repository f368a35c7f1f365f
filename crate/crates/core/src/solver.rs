//! Model-consistent solutions: zero-state, zero-input, total response,
//! feedback-predictor realization, Monte-Carlo simulation, and the general
//! multi-lead/lag solver.
//!
//! For a regular model the zero-state response of any model-consistent
//! forecasting mechanism is pinned down, up to the free parameter
//! `Ahat F0`, by the pair of transfer matrices
//!
//! ```text
//! F[z] = [z^2 Ahat - z I + A]^-1 [(z I - A)(Ahat F0 + B)(z I - R) - z^2 B]
//! G[z] = [z^2 Ahat - z I + A]^-1 z [Ahat (Ahat F0 + B)(z I - R) - B]
//! ```
//!
//! and a solution exists iff `F[z]` is proper.  The zero-input (perfect
//! foresight) response adds the initial-condition path `xbar_t`; the total
//! response is their superposition.  The forecast error realized at `t` is
//! `(Ahat F0 + B) w_t` regardless of initial conditions.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    check_weak_consistency, check_well_posed, GeneralModel, InitCond, ModelCM, ShockSpec,
};
use crate::polyalg::{ImpulseSeq, MatrixPoly, Properness, RationalMatrix};
use crate::tol::Tolerances;

/// Zero-state response kernels for one value of the free parameter.
#[derive(Debug, Clone)]
pub struct ZeroState {
    /// Transfer matrix of the forecasting mechanism.
    pub fz: RationalMatrix,
    /// Transfer matrix of the full model.
    pub gz: RationalMatrix,
    /// Forecast kernel `F_t`, `t = 0..=T`.
    pub ft: ImpulseSeq,
    /// Endogenous kernel `G_t`, `t = 0..=T`.
    pub gt: ImpulseSeq,
}

/// Zero-input (perfect-foresight) response.
#[derive(Debug, Clone)]
pub struct ZeroInput {
    /// Transform of the perfect-foresight path.
    pub xbar_z: RationalMatrix,
    /// Path `xbar_t`, `t = 0..=T+1`; empty when no perfect-foresight
    /// solution exists.
    pub xbar: Vec<DVector<f64>>,
    /// Whether the initial conditions are consistent (`Xbar[z] - xhat_{1,-1}`
    /// strictly proper).  Inconsistency is a modeling outcome, not an error.
    pub consistent: bool,
}

/// The unique model-consistent solution for one value of `Ahat F0`.
#[derive(Debug, Clone)]
pub struct Solution {
    /// The free parameter `Ahat F0`.
    pub af0: DMatrix<f64>,
    pub fz: RationalMatrix,
    pub gz: RationalMatrix,
    /// Forecast kernel driven by the exogenous inputs, `t = 0..=T`.
    pub ft: ImpulseSeq,
    /// Endogenous kernel driven by the exogenous inputs, `t = 0..=T`.
    pub gt: ImpulseSeq,
    /// Perfect-foresight path, `t = 0..=T+1`.
    pub xbar: Vec<DVector<f64>>,
    /// `Ahat F0 + B`: the coefficient mapping `w_t` to realized forecast
    /// errors, equal to `G_0`.
    pub error_coeff: DMatrix<f64>,
}

impl Solution {
    /// Horizon `T` of the stored kernels.
    pub fn horizon(&self) -> usize {
        self.gt.len() - 1
    }

    /// Noise-driven kernels: the stored input-driven kernels convolved with
    /// `R^t`.
    pub fn noise_driven(&self, r: &DMatrix<f64>) -> (ImpulseSeq, ImpulseSeq) {
        (
            self.ft.convolve_matrix_powers(r),
            self.gt.convolve_matrix_powers(r),
        )
    }
}

/// Feedforward/feedback realization of a model-consistent forecasting
/// mechanism (well-posed models only).
#[derive(Debug, Clone)]
pub struct Predictor {
    /// Kernel of `[I - z Ahat]^-1`.
    pub phi: ImpulseSeq,
    /// Kernel of `[I - z Ahat]^-1 z Ahat Ahat^g`.
    pub psi: ImpulseSeq,
    /// Generalized inverse with `Ahat Ahat^g Ahat = Ahat` (Moore-Penrose).
    pub ag: DMatrix<f64>,
    pub af0: DMatrix<f64>,
}

/// Trajectories of the closed-loop interconnection of model and predictor.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub x: Vec<DVector<f64>>,
    pub xhat: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
}

/// One simulated sample path.
#[derive(Debug, Clone)]
pub struct SimPath {
    pub w: Vec<DVector<f64>>,
    pub x: Vec<DVector<f64>>,
    pub xhat: Vec<DVector<f64>>,
}

/// Ensemble statistics from [`simulate_paths`].
#[derive(Debug, Clone)]
pub struct SimulationResult {
    /// Ensemble mean of the realized forecast error `x_t - xhat_{1,t-1}` for
    /// `t = 0..=T`.
    pub mean_error: Vec<DVector<f64>>,
    /// Theoretical per-component standard deviation of the forecast error,
    /// from `diag((Ahat F0 + B) Cov (Ahat F0 + B)^T)`.
    pub error_std: DVector<f64>,
    /// Worst relative residual of the per-path identity
    /// `x_{t+1} - xhat_{1,t} = (Ahat F0 + B) w_{t+1}` over all paths and
    /// times.
    pub max_identity_residual: f64,
    /// Sample paths, retained when requested.
    pub paths: Option<Vec<SimPath>>,
}

/// Free parameters of the general solver: the initial forecast kernels
/// `F_{i,0}` for `0 < i < h` and the product `A_h0 F_{h,0}`.
#[derive(Debug, Clone)]
pub struct GeneralFreeParams {
    pub f_i0: Vec<DMatrix<f64>>,
    pub ah0_fh0: DMatrix<f64>,
}

impl GeneralFreeParams {
    /// All-zero free parameters for a model with the given lead structure.
    pub fn zero(gm: &GeneralModel) -> Self {
        let (n, m) = (gm.n(), gm.m());
        Self {
            f_i0: vec![DMatrix::zeros(n, m); gm.h().saturating_sub(1)],
            ah0_fh0: DMatrix::zeros(n, m),
        }
    }
}

/// Zero-state solution of the general model.
#[derive(Debug, Clone)]
pub struct GeneralSolution {
    pub free: GeneralFreeParams,
    /// Transform of the endogenous kernel.
    pub gz: RationalMatrix,
    /// Noise-driven endogenous kernel, `t = 0..=T`.
    pub gt: ImpulseSeq,
    /// Forecast kernels `F_{i,t} = G_{t+i}`, indexed `i = 1..=h` (entry
    /// `i - 1`), each `t = 0..=T`.
    pub fit: Vec<ImpulseSeq>,
}

/// Numerator of `F[z]`: `(z I - A) C (z I - R) - z^2 B` with
/// `C = Ahat F0 + B`.
fn f_numerator(model: &ModelCM, error_coeff: &DMatrix<f64>) -> MatrixPoly {
    let c = error_coeff;
    let z0 = &model.a * c * &model.r;
    let z1 = -(&model.a * c) - c * &model.r;
    let z2 = c - &model.b;
    MatrixPoly::new(vec![z0, z1, z2]).expect("coefficients share dimensions")
}

/// Numerator of `G[z]`: `z [Ahat C (z I - R) - B]`.
fn g_numerator(model: &ModelCM, error_coeff: &DMatrix<f64>) -> MatrixPoly {
    let ac = &model.ahat * error_coeff;
    let z1 = -(&ac * &model.r) - &model.b;
    let z2 = ac;
    MatrixPoly::new(vec![DMatrix::zeros(model.n(), model.m()), z1, z2])
        .expect("coefficients share dimensions")
}

/// Checks that every column of `af0` lies in the column span of `Ahat`.
fn check_af0_in_image(model: &ModelCM, af0: &DMatrix<f64>, tol: &Tolerances) -> Result<()> {
    if af0.shape() != (model.n(), model.m()) {
        return Err(Error::DimensionMismatch("Ahat F0 must be n x m".into()));
    }
    let basis = linalg::image_basis(&model.ahat, tol.image_rank);
    for col in 0..af0.ncols() {
        let v = af0.column(col).into_owned();
        let residual = linalg::projection_residual(&basis, &v);
        if residual > tol.image_residual * (1.0 + v.norm()) {
            return Err(Error::NotInImage { col, residual });
        }
    }
    Ok(())
}

/// Zero-state response for a given free parameter `Ahat F0`.
///
/// Builds `F[z]` and `G[z]` as left fractions over the characteristic matrix,
/// verifies that `F[z]` is proper (the necessary and sufficient existence
/// condition), and expands both kernels to the horizon.
pub fn zero_state(
    model: &ModelCM,
    af0: &DMatrix<f64>,
    horizon: usize,
    tol: &Tolerances,
) -> Result<ZeroState> {
    check_af0_in_image(model, af0, tol)?;
    let error_coeff = af0 + &model.b;
    let den = model.char_matrix();
    let fz = RationalMatrix::left_mfd(den.clone(), f_numerator(model, &error_coeff), tol)?;
    let gz = RationalMatrix::left_mfd(den, g_numerator(model, &error_coeff), tol)?;
    if fz.classify(tol)? == Properness::Improper {
        let (row, col, exponent) = fz.worst_growth(tol)?;
        return Err(Error::NoSolution { row, col, exponent });
    }
    let ft = fz.expand_impulse(horizon, tol)?;
    let gt = gz.expand_impulse(horizon, tol)?;
    Ok(ZeroState { fz, gz, ft, gt })
}

/// Zero-input (perfect-foresight) response for given initial conditions.
///
/// `Xbar[z] = [z^2 Ahat - z I + A]^-1 [z^2 Ahat xhat_{1,-1} - z A x_{-1}
/// - z B R [I - R z^-1]^-1 u_{-1}]`.  A perfect-foresight solution exists iff
/// `Xbar[z] - xhat_{1,-1}` is strictly proper, i.e. `Xbar[z]` is proper and
/// its expansion starts at `xhat_{1,-1}`; the outcome is returned as a flag.
pub fn zero_input(
    model: &ModelCM,
    ic: &InitCond,
    horizon: usize,
    tol: &Tolerances,
) -> Result<ZeroInput> {
    ic.matches(model)?;
    let n = model.n();
    let den = model.char_matrix();

    // z^2 Ahat xhat - z A x_prev, as an n x 1 polynomial
    let head = MatrixPoly::new(vec![
        DMatrix::zeros(n, 1),
        DMatrix::from_column_slice(n, 1, (-(&model.a * &ic.x_prev)).as_slice()),
        DMatrix::from_column_slice(n, 1, (&model.ahat * &ic.xhat_prev).as_slice()),
    ])?;

    let xbar_z = if ic.u_prev.amax() == 0.0 || model.r.amax() == 0.0 {
        RationalMatrix::left_mfd(den, head, tol)?
    } else {
        // -z B R [I - R z^-1]^-1 u_prev = -z^2 B R (z I - R)^-1 u_prev,
        // written over the scalar denominator det(z I - R)
        let z_minus_r = MatrixPoly::z_minus(&model.r);
        let delta_r = z_minus_r.det_poly(tol)?;
        let adj_r = z_minus_r.adjugate(tol)?;
        let adj_u = MatrixPoly::new(
            (0..=adj_r.degree())
                .map(|k| {
                    DMatrix::from_column_slice(model.m(), 1, (adj_r.coeff(k) * &ic.u_prev).as_slice())
                })
                .collect(),
        )?;
        let tail = MatrixPoly::constant(-(&model.b * &model.r))
            .mul(&adj_u)?
            .shift(2);
        let num = head.mul_scalar_poly(&delta_r).add(&tail)?;
        let delta_poly = MatrixPoly::new(
            delta_r.iter().map(|&c| DMatrix::from_element(1, 1, c)).collect(),
        )?;
        RationalMatrix::new(den, num, delta_poly, tol)?
    };

    if xbar_z.classify(tol)? == Properness::Improper {
        return Ok(ZeroInput {
            xbar_z,
            xbar: Vec::new(),
            consistent: false,
        });
    }
    let expansion = xbar_z.expand_impulse(horizon + 1, tol)?;
    let term0 = expansion.term(0).column(0).into_owned();
    let consistent =
        (&term0 - &ic.xhat_prev).norm() <= tol.consistency_term0 * (1.0 + ic.xhat_prev.norm());
    let xbar = expansion
        .terms()
        .iter()
        .map(|m| m.column(0).into_owned())
        .collect();
    Ok(ZeroInput {
        xbar_z,
        xbar,
        consistent,
    })
}

/// Total response: superposition of zero-state and zero-input solutions.
///
/// The endogenous path of the full model is
/// `x_t = sum_tau G_{t-tau} utilde_tau + xbar_t` with
/// `utilde_t = u_t - R^{t+1} u_{-1}`, and the realized forecast error at `t`
/// is `(Ahat F0 + B) w_t`.
pub fn solve_total(
    model: &ModelCM,
    af0: &DMatrix<f64>,
    ic: &InitCond,
    horizon: usize,
    tol: &Tolerances,
) -> Result<Solution> {
    let zi = zero_input(model, ic, horizon, tol)?;
    if !zi.consistent {
        return Err(Error::InconsistentInitialConditions);
    }
    let zs = zero_state(model, af0, horizon, tol)?;
    let error_coeff = af0 + &model.b;
    // boundary identity: term 0 of the endogenous kernel is Ahat F0 + B
    let g0_gap = (zs.gt.term(0) - &error_coeff).amax();
    if g0_gap > 1e-7 * (1.0 + error_coeff.amax()) {
        return Err(Error::Numerical(format!(
            "expanded G_0 disagrees with Ahat F0 + B by {g0_gap:.3e}"
        )));
    }
    Ok(Solution {
        af0: af0.clone(),
        fz: zs.fz,
        gz: zs.gz,
        ft: zs.ft,
        gt: zs.gt,
        xbar: zi.xbar,
        error_coeff,
    })
}

/// A forecast-initialization `F0` consistent with a given `Ahat F0`
/// (minimum-norm preimage under `Ahat`).
pub fn forecast_f0(model: &ModelCM, af0: &DMatrix<f64>, tol: &Tolerances) -> DMatrix<f64> {
    linalg::pinv(&model.ahat, tol.image_rank) * af0
}

/// Feedforward/feedback realization of the forecasting mechanism for a
/// well-posed model with weakly consistent initial conditions.
///
/// `Phi_t` and `Psi_t` are the kernels of `[I - z Ahat]^-1` and
/// `[I - z Ahat]^-1 z Ahat Ahat^g`; the predictor law is
///
/// ```text
/// xhat_{1,t} = sum Phi_{t-tau} (A x_tau + B R u_tau)
///            - sum Psi_{t-tau} Ahat F0 w_tau
///            - Psi_t (xhat_{1,-1} - A x_{-1} - B R u_{-1})
/// ```
pub fn feedback_predictor(
    model: &ModelCM,
    af0: &DMatrix<f64>,
    ic: &InitCond,
    horizon: usize,
    tol: &Tolerances,
) -> Result<Predictor> {
    if !check_well_posed(model, tol)? {
        return Err(Error::NotWellPosed);
    }
    if !check_weak_consistency(model, ic, tol) {
        return Err(Error::NotWeaklyConsistent);
    }
    check_af0_in_image(model, af0, tol)?;
    let n = model.n();
    let ag = linalg::pinv(&model.ahat, tol.image_rank);
    let residual = (&model.ahat * &ag * &model.ahat - &model.ahat).amax();
    if residual > tol.pinv_residual * (1.0 + model.ahat.amax()) {
        return Err(Error::Numerical(format!(
            "generalized inverse residual {residual:.3e}"
        )));
    }
    let den = MatrixPoly::new(vec![DMatrix::identity(n, n), -model.ahat.clone()])?;
    let phi = RationalMatrix::left_mfd(den.clone(), MatrixPoly::identity(n), tol)?
        .expand_impulse(horizon, tol)?;
    let psi_num = MatrixPoly::constant(&model.ahat * &ag).shift(1);
    let psi = RationalMatrix::left_mfd(den, psi_num, tol)?.expand_impulse(horizon, tol)?;
    Ok(Predictor {
        phi,
        psi,
        ag,
        af0: af0.clone(),
    })
}

/// Simulates the closed-loop interconnection of the model equations with the
/// feedback predictor, for a given driving-noise sequence.
///
/// The forecast and the endogenous vector are simultaneous at each `t`
/// (`Phi_0` can be nonzero when `Ahat` is singular), so the two equations are
/// solved jointly.
pub fn closed_loop_simulate(
    model: &ModelCM,
    predictor: &Predictor,
    ic: &InitCond,
    ws: &[DVector<f64>],
) -> Result<ClosedLoop> {
    ic.matches(model)?;
    let steps = ws.len().min(predictor.phi.len());
    let phi0 = predictor.phi.term(0);
    let coeff = DMatrix::identity(model.n(), model.n()) - &model.ahat * phi0 * &model.a;
    let lu = coeff.lu();
    let d0 = &ic.xhat_prev - &model.a * &ic.x_prev - &model.b * &model.r * &ic.u_prev;

    let mut xs: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut xhats: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut us: Vec<DVector<f64>> = Vec::with_capacity(steps);
    let mut feed: Vec<DVector<f64>> = Vec::with_capacity(steps); // A x_tau + B R u_tau
    for t in 0..steps {
        let u_prev = if t == 0 { &ic.u_prev } else { &us[t - 1] };
        let u = &model.r * u_prev + &ws[t];
        // history terms of the predictor law
        let mut s = -(predictor.psi.term(t) * &d0);
        for (tau, f) in feed.iter().enumerate() {
            s += predictor.phi.term(t - tau) * f;
        }
        for tau in 0..=t {
            s -= predictor.psi.term(t - tau) * &predictor.af0 * &ws[tau];
        }
        let x_lag = if t == 0 { &ic.x_prev } else { &xs[t - 1] };
        let rhs = &model.a * x_lag
            + &model.ahat * (phi0 * &model.b * &model.r * &u)
            + &model.ahat * &s
            + &model.b * &u;
        let x = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("closed-loop interconnection is singular".into()))?;
        let xhat = phi0 * (&model.a * &x + &model.b * &model.r * &u) + &s;
        feed.push(&model.a * &x + &model.b * &model.r * &u);
        xs.push(x);
        xhats.push(xhat);
        us.push(u);
    }
    Ok(ClosedLoop {
        x: xs,
        xhat: xhats,
        u: us,
    })
}

/// Draws shock paths and evaluates the solution on them.
///
/// Noise is zero-mean Gaussian with the covariance of `shocks`, generated
/// from a per-path substream seeded by `seed + path index`, so serial and
/// concurrent evaluation orders produce identical ensembles.  Reports the
/// ensemble mean forecast error and the worst relative residual of the
/// per-path identity `x_{t+1} - xhat_{1,t} = (Ahat F0 + B) w_{t+1}`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_paths(
    model: &ModelCM,
    solution: &Solution,
    shocks: &ShockSpec,
    ic: &InitCond,
    n_paths: usize,
    horizon: usize,
    store_paths: bool,
    _tol: &Tolerances,
) -> Result<SimulationResult> {
    ic.matches(model)?;
    if shocks.covariance.nrows() != model.m() {
        return Err(Error::DimensionMismatch("covariance size must equal m".into()));
    }
    if horizon > solution.horizon() || horizon + 1 >= solution.xbar.len() {
        return Err(Error::DimensionMismatch(
            "simulation horizon exceeds the solution's stored kernels".into(),
        ));
    }
    let m = model.m();
    let factor = shocks.factor();
    let error_cov = &solution.error_coeff * &shocks.covariance * solution.error_coeff.transpose();
    let error_std = DVector::from_iterator(
        model.n(),
        (0..model.n()).map(|i| error_cov[(i, i)].max(0.0).sqrt()),
    );

    // R^{t+1} u_{-1} terms for the utilde conversion
    let mut r_pow_u = Vec::with_capacity(horizon + 2);
    let mut acc = &model.r * &ic.u_prev;
    for _ in 0..=horizon + 1 {
        r_pow_u.push(acc.clone());
        acc = &model.r * &acc;
    }

    let mut mean_error = vec![DVector::zeros(model.n()); horizon + 1];
    let mut max_identity_residual: f64 = 0.0;
    let mut paths_store: Option<Vec<SimPath>> = store_paths.then(|| Vec::with_capacity(n_paths));

    for p in 0..n_paths {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(shocks.seed.wrapping_add(p as u64));
        let mut ws = Vec::with_capacity(horizon + 1);
        for _ in 0..=horizon {
            let xi = DVector::from_iterator(m, (0..m).map(|_| StandardNormal.sample(&mut rng)));
            ws.push(&factor * xi);
        }
        // u_t = R u_{t-1} + w_t ; utilde_t = u_t - R^{t+1} u_{-1}
        let mut utildes: Vec<DVector<f64>> = Vec::with_capacity(horizon + 1);
        let mut u_prev = ic.u_prev.clone();
        for w in ws.iter() {
            let u = &model.r * &u_prev + w;
            utildes.push(&u - &r_pow_u[utildes.len()]);
            u_prev = u;
        }
        let mut xs = Vec::with_capacity(horizon + 1);
        let mut xhats = Vec::with_capacity(horizon + 1);
        for t in 0..=horizon {
            let mut x = solution.xbar[t].clone();
            let mut xhat = solution.xbar[t + 1].clone();
            for tau in 0..=t {
                x += solution.gt.term(t - tau) * &utildes[tau];
                xhat += solution.ft.term(t - tau) * &utildes[tau];
            }
            xs.push(x);
            xhats.push(xhat);
        }
        for t in 0..=horizon {
            let prediction = if t == 0 { &ic.xhat_prev } else { &xhats[t - 1] };
            let error = &xs[t] - prediction;
            let implied = &solution.error_coeff * &ws[t];
            let scale = 1.0 + xs[t].norm() + implied.norm();
            max_identity_residual = max_identity_residual.max((&error - &implied).norm() / scale);
            mean_error[t] += error;
        }
        if let Some(store) = paths_store.as_mut() {
            store.push(SimPath {
                w: ws,
                x: xs,
                xhat: xhats,
            });
        }
    }
    for e in mean_error.iter_mut() {
        *e /= n_paths as f64;
    }
    Ok(SimulationResult {
        mean_error,
        error_std,
        max_identity_residual,
        paths: paths_store,
    })
}

/// Zero-state solution of the general model for given free parameters.
///
/// With `Gbar_0 = B - sum_i A_i0 F_{i,0}` and `Gbar_i = F_{i,0}`, the
/// endogenous kernel transform is `G[z] = D[z]^-1 N[z]` where
///
/// ```text
/// N[z] = sum_{i=1..h} sum_{j=0..l} sum_{k=0..i-1} A_ij z^{i+l-j-k} Gbar_k
///      + z^l B [I - R z^-1]^-1
/// ```
///
/// and a solution exists iff `F_h[z] = z^h (G[z] - sum_{k<h} z^{-k} Gbar_k)`
/// is proper.  When `D[z]^-1 z^{h+l-1}` is proper the existence test is
/// skipped: a solution exists for every free-parameter value.
pub fn solve_general(
    gm: &GeneralModel,
    free: &GeneralFreeParams,
    horizon: usize,
    tol: &Tolerances,
) -> Result<GeneralSolution> {
    let (n, m, h, l) = (gm.n(), gm.m(), gm.h(), gm.l());
    if h == 0 {
        return Err(Error::InvalidFreeParams(
            "the general solver needs at least one expectational lead".into(),
        ));
    }
    if free.f_i0.len() != h - 1 {
        return Err(Error::InvalidFreeParams(format!(
            "expected {} initial forecast kernels, got {}",
            h - 1,
            free.f_i0.len()
        )));
    }
    if free.ah0_fh0.shape() != (n, m) || free.f_i0.iter().any(|f| f.shape() != (n, m)) {
        return Err(Error::InvalidFreeParams("free parameters must be n x m".into()));
    }

    let d = gm.d_poly();
    if !d.is_regular(tol) {
        return Err(Error::NotRegular);
    }

    // boundary values Gbar_0 .. Gbar_{h-1}
    let mut gbar = Vec::with_capacity(h);
    {
        let mut g0 = gm.b.clone() - &free.ah0_fh0;
        for (idx, f) in free.f_i0.iter().enumerate() {
            g0 -= gm.coeff(idx + 1, 0) * f;
        }
        gbar.push(g0);
    }
    for f in &free.f_i0 {
        gbar.push(f.clone());
    }

    // polynomial part of the numerator: sum_{i,j,k} A_ij z^{i+l-j-k} Gbar_k
    let mut poly_part = MatrixPoly::zero(n, m);
    for i in 1..=h {
        for j in 0..=l {
            let aij = gm.coeff(i, j);
            if aij.amax() == 0.0 {
                continue;
            }
            for (k, g) in gbar.iter().enumerate().take(i) {
                let power = i + l - j - k;
                poly_part = poly_part.add(&MatrixPoly::constant(&aij * g).shift(power))?;
            }
        }
    }

    let r_is_zero = gm.r.amax() == 0.0;
    let (num, right_den) = if r_is_zero {
        // [I - R z^-1]^-1 = I
        let num = poly_part.add(&MatrixPoly::constant(gm.b.clone()).shift(l))?;
        (num, MatrixPoly::identity(m))
    } else {
        // z^l B [I - R z^-1]^-1 = z^{l+1} B adj(z I - R) / det(z I - R);
        // everything is put over the scalar right denominator det(z I - R)
        let z_minus_r = MatrixPoly::z_minus(&gm.r);
        let delta_r = z_minus_r.det_poly(tol)?;
        let adj_r = z_minus_r.adjugate(tol)?;
        let tail = MatrixPoly::constant(gm.b.clone()).mul(&adj_r)?.shift(l + 1);
        let num = poly_part.mul_scalar_poly(&delta_r).add(&tail)?;
        (num, MatrixPoly::identity(m).mul_scalar_poly(&delta_r))
    };
    let gz = RationalMatrix::new(d.clone(), num.clone(), right_den.clone(), tol)?;

    // existence: generalized well-posedness shortcut, otherwise properness
    // of F_h[z]
    let shortcut = h + l >= 1
        && RationalMatrix::left_mfd(d.clone(), MatrixPoly::identity(n).shift(h + l - 1), tol)?
            .classify(tol)?
            != Properness::Improper;
    if !shortcut {
        // F_h[z] = D^-1 [ z^h N - D (sum_k z^{h-k} Gbar_k) Dr ] Dr^-1
        let mut boundary = MatrixPoly::zero(n, m);
        for (k, g) in gbar.iter().enumerate() {
            boundary = boundary.add(&MatrixPoly::constant(g.clone()).shift(h - k))?;
        }
        let fh_num = num.shift(h).sub(&d.mul(&boundary)?.mul(&right_den)?)?.trim();
        let fh = RationalMatrix::new(d.clone(), fh_num, right_den, tol)?;
        if fh.classify(tol)? == Properness::Improper {
            let (row, col, exponent) = fh.worst_growth(tol)?;
            return Err(Error::NoSolution { row, col, exponent });
        }
    }

    let expansion = gz.expand_impulse(horizon + h, tol)?;
    let gt = ImpulseSeq::new(expansion.terms()[..=horizon].to_vec())?;
    let fit = (1..=h)
        .map(|i| {
            ImpulseSeq::new((0..=horizon).map(|t| expansion.term(t + i).clone()).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneralSolution {
        free: free.clone(),
        gz,
        gt,
        fit,
    })
}
