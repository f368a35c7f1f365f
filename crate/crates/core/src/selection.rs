//! Criteria that consume the free parameter `Ahat F0`: dynamical-stability
//! selection via simultaneous pole-zero cancellation, least-square forecast
//! errors, and the expectation-gain eigenvalue analysis.
//!
//! Stability selection asks the numerator of `G[z]` to share every unstable
//! eigenvalue of the characteristic matrix together with its left
//! eigenvector: for each unstable root `lambda_i` with left null vector `c_i`
//! of the denominator, `c_i Ahat (Ahat F0 + B) = c_i B (lambda_i I - R)^-1`.
//! Stacking those rows gives a linear system in the parameterization
//! `Ahat F0 = Ahat P`; solvability decides existence and a null-space
//! inclusion decides uniqueness.  The least-squares criterion instead sets
//! `Ahat F0 = -B_par`, the negated projection of `B` onto the column span of
//! `Ahat`, which minimizes every squared forecast-error term regardless of
//! stability.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::ModelCM;
use crate::polyalg::{polyeig, MatrixPoly};
use crate::tol::Tolerances;

/// Outcome of the stability selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Determinacy {
    /// Exactly one stable model-consistent solution.
    Determinate,
    /// The cancellation system is solvable but does not pin `Ahat F0` down.
    Indeterminate,
    /// The cancellation system is unsolvable.
    NoStableSolution,
    /// An eigenvalue sits on (or numerically at) the unit circle; no call is
    /// made.
    Boundary,
}

/// Report of [`select_stability`].
#[derive(Debug, Clone)]
pub struct DeterminacyReport {
    pub classification: Determinacy,
    /// The selected free parameter; present exactly when determinate.
    pub af0: Option<DMatrix<f64>>,
    /// Unstable eigenvalues of the characteristic matrix (modulus above
    /// `1 + tol.unstable_margin`), sorted by descending modulus.
    pub unstable_eigs: Vec<Complex64>,
    /// Left null vectors of `P[lambda_i]` for the representatives used in
    /// the cancellation system (one per conjugate pair).
    pub left_vecs: Vec<RowDVector<Complex64>>,
    /// Least-squares residual of the stacked cancellation system.
    pub residual: f64,
    /// Spectral radius of the minimal realization of `G[z]`, when the
    /// determinate selection was verified.
    pub g_spectral_radius: Option<f64>,
}

/// Eigenvalue loci of `[z^2 eps Ahat - z I + A]` over a grid of expectation
/// weights.
#[derive(Debug, Clone)]
pub struct GainSweepResult {
    pub epsilons: Vec<f64>,
    /// Finite eigenvalues per grid point, reordered for locus continuity by
    /// nearest-neighbor pairing across adjacent points; `None` where the
    /// polynomial was not regular.
    pub loci: Vec<Option<Vec<Complex64>>>,
    /// Number of infinite eigenvalues per grid point.
    pub infinite_counts: Vec<usize>,
}

/// Stability/determinacy selection by simultaneous pole-zero cancellation.
pub fn select_stability(model: &ModelCM, tol: &Tolerances) -> Result<DeterminacyReport> {
    let p = model.char_matrix();
    let eigs = polyeig(&p, tol)?;

    if eigs
        .finite
        .iter()
        .any(|z| (z.norm() - 1.0).abs() <= tol.boundary_band)
    {
        return Ok(DeterminacyReport {
            classification: Determinacy::Boundary,
            af0: None,
            unstable_eigs: unstable_of(&eigs.finite, tol),
            left_vecs: Vec::new(),
            residual: 0.0,
            g_spectral_radius: None,
        });
    }

    let unstable = unstable_of(&eigs.finite, tol);
    let r_eigs: Vec<Complex64> = if model.m() > 0 {
        model.r.complex_eigenvalues().iter().copied().collect()
    } else {
        Vec::new()
    };
    for lam in &unstable {
        if r_eigs.iter().any(|mu| (lam - mu).norm() < tol.eig_on_r) {
            return Err(Error::EigenvalueOnR(*lam));
        }
    }

    // conjugate pairs contribute one representative with Im > 0; clusters of
    // equal eigenvalues are handled through the eigenspace dimension
    let mut representatives: Vec<(Complex64, usize)> = Vec::new();
    for lam in &unstable {
        if lam.im < -1e-12 * (1.0 + lam.norm()) {
            continue; // conjugate of a retained representative
        }
        let lam = if lam.im.abs() <= 1e-12 * (1.0 + lam.norm()) {
            Complex64::new(lam.re, 0.0)
        } else {
            *lam
        };
        match representatives
            .iter_mut()
            .find(|(mu, _)| (lam - *mu).norm() <= tol.eig_cluster * (1.0 + lam.norm()))
        {
            Some((_, mult)) => *mult += 1,
            None => representatives.push((lam, 1)),
        }
    }

    // rows c Ahat Ahat and right-hand sides c B (lam I - R)^-1 - c Ahat B,
    // split into real and imaginary parts for complex representatives
    let n = model.n();
    let m = model.m();
    let mut sys_rows: Vec<RowDVector<f64>> = Vec::new();
    let mut rhs_rows: Vec<RowDVector<f64>> = Vec::new();
    let mut left_vecs = Vec::new();
    let ahat_c = model.ahat.map(|x| Complex64::new(x, 0.0));
    let b_c = model.b.map(|x| Complex64::new(x, 0.0));
    let r_c = model.r.map(|x| Complex64::new(x, 0.0));
    for &(lam, mult) in &representatives {
        let plam = p.eval(lam);
        let svd = plam.clone().svd(true, false);
        let sv = &svd.singular_values;
        let smax = sv.max();
        let nullity = sv.iter().filter(|&&s| s <= tol.null_rank * smax).count();
        if nullity < mult {
            return Err(Error::DefectiveUnstable {
                eigenvalue: lam,
                multiplicity: mult,
                nullity,
            });
        }
        let u = svd
            .u
            .ok_or_else(|| Error::Numerical("svd did not return U".into()))?;
        let resolvent = (DMatrix::from_diagonal_element(m, m, lam) - &r_c)
            .lu()
            .try_inverse()
            .ok_or(Error::EigenvalueOnR(lam))?;
        for k in 0..mult {
            let c = RowDVector::from_iterator(n, u.column(n - 1 - k).iter().map(|x| x.conj()));
            let row = &c * &ahat_c * &ahat_c;
            let rhs = &c * &b_c * &resolvent - &c * &ahat_c * &b_c;
            let is_complex = lam.im != 0.0;
            sys_rows.push(RowDVector::from_iterator(n, row.iter().map(|x| x.re)));
            rhs_rows.push(RowDVector::from_iterator(m, rhs.iter().map(|x| x.re)));
            if is_complex {
                sys_rows.push(RowDVector::from_iterator(n, row.iter().map(|x| x.im)));
                rhs_rows.push(RowDVector::from_iterator(m, rhs.iter().map(|x| x.im)));
            }
            left_vecs.push(c);
        }
    }

    let rows = sys_rows.len();
    let mut sys = DMatrix::zeros(rows, n);
    let mut rhs = DMatrix::zeros(rows, m);
    for (i, (srow, rrow)) in sys_rows.iter().zip(&rhs_rows).enumerate() {
        sys.row_mut(i).copy_from(srow);
        rhs.row_mut(i).copy_from(rrow);
    }

    let p_mat = if rows == 0 {
        DMatrix::zeros(n, m)
    } else {
        linalg::lstsq(&sys, &rhs, tol.image_rank)
    };
    let residual = if rows == 0 {
        0.0
    } else {
        (&sys * &p_mat - &rhs).norm()
    };
    let scale = 1.0 + rhs.norm();

    if residual > tol.exist_residual * scale {
        return Ok(DeterminacyReport {
            classification: Determinacy::NoStableSolution,
            af0: None,
            unstable_eigs: unstable,
            left_vecs,
            residual,
            g_spectral_radius: None,
        });
    }

    // uniqueness of Ahat P over solutions of the stacked system:
    // null(sys) must be contained in null(Ahat)
    let unique = {
        let null_basis: Vec<DVector<f64>> = if rows == 0 {
            (0..n)
                .map(|i| DVector::from_fn(n, |r, _| f64::from(u8::from(r == i))))
                .collect()
        } else {
            linalg::null_space_basis(&sys, tol.image_rank)
        };
        let ahat_scale = linalg::spectral_norm(&model.ahat).max(1e-300);
        null_basis
            .iter()
            .all(|v| (&model.ahat * v).norm() <= 1e-8 * ahat_scale * v.norm().max(1e-300))
    };

    if !unique {
        return Ok(DeterminacyReport {
            classification: Determinacy::Indeterminate,
            af0: None,
            unstable_eigs: unstable,
            left_vecs,
            residual,
            g_spectral_radius: None,
        });
    }

    let af0 = &model.ahat * &p_mat;
    // the cancelled G[z] must realize with every remaining pole stable
    let gs = crate::solver::zero_state(model, &af0, 1, tol)?;
    let hint = n * 2 + m + 1;
    let g_ss = crate::realize::minimal_realization(&gs.gz, hint, tol)?;
    let radius = g_ss.spectral_radius();
    if radius >= 1.0 {
        return Err(Error::StabilityVerificationFailed(radius));
    }
    Ok(DeterminacyReport {
        classification: Determinacy::Determinate,
        af0: Some(af0),
        unstable_eigs: unstable,
        left_vecs,
        residual,
        g_spectral_radius: Some(radius),
    })
}

fn unstable_of(finite: &[Complex64], tol: &Tolerances) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = finite
        .iter()
        .copied()
        .filter(|z| z.norm() > 1.0 + tol.unstable_margin)
        .collect();
    out.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    out
}

/// Least-square-forecast-error selection: `Ahat F0 = -B_par`, the negated
/// projection of `B` onto the column span of `Ahat`.
///
/// The resulting error coefficient is the orthogonal component `B_perp`,
/// which satisfies `Ahat^T B_perp = 0`; every squared-error term
/// `e_t' e_t = w_t' B_perp' B_perp w_t` is the attainable minimum.
pub fn select_least_squares(model: &ModelCM, tol: &Tolerances) -> Result<DMatrix<f64>> {
    if model.ahat.amax() == 0.0 {
        return Err(Error::ZeroAhat);
    }
    let basis = linalg::image_basis(&model.ahat, tol.image_rank);
    let b_par = &basis * (basis.transpose() * &model.b);
    Ok(-b_par)
}

/// Finite-eigenvalue loci of `[z^2 eps Ahat - z I + A]` over a positive grid
/// (zero is allowed and handled as the degree-one polynomial `-z I + A`).
///
/// Irregularity at a grid point is recorded for that point and the sweep
/// continues.  Adjacent loci of equal length are aligned by greedy
/// nearest-neighbor pairing.
pub fn gain_sweep(model: &ModelCM, eps_grid: &[f64], tol: &Tolerances) -> Result<GainSweepResult> {
    let n = model.n();
    let mut epsilons = Vec::with_capacity(eps_grid.len());
    let mut loci: Vec<Option<Vec<Complex64>>> = Vec::with_capacity(eps_grid.len());
    let mut infinite_counts = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if eps < 0.0 {
            return Err(Error::DimensionMismatch("gain grid values must be nonnegative".into()));
        }
        let poly = if eps == 0.0 {
            MatrixPoly::new(vec![model.a.clone(), -DMatrix::identity(n, n)])?
        } else {
            MatrixPoly::new(vec![
                model.a.clone(),
                -DMatrix::identity(n, n),
                &model.ahat * eps,
            ])?
        };
        match polyeig(&poly, tol) {
            Ok(es) => {
                infinite_counts.push(es.infinite_count);
                loci.push(Some(es.finite));
            }
            Err(Error::NotRegular) => {
                infinite_counts.push(0);
                loci.push(None);
            }
            Err(e) => return Err(e),
        }
        epsilons.push(eps);
    }
    // nearest-neighbor continuity matching
    for i in 1..loci.len() {
        let (head, tail) = loci.split_at_mut(i);
        if let (Some(prev), Some(cur)) = (head[i - 1].as_ref(), tail[0].as_mut()) {
            if prev.len() == cur.len() {
                let mut reordered = Vec::with_capacity(cur.len());
                let mut used = vec![false; cur.len()];
                for p in prev {
                    let mut best = None;
                    let mut best_d = f64::INFINITY;
                    for (k, c) in cur.iter().enumerate() {
                        if !used[k] {
                            let d = (p - c).norm();
                            if d < best_d {
                                best_d = d;
                                best = Some(k);
                            }
                        }
                    }
                    let k = best.expect("unused candidate exists");
                    used[k] = true;
                    reordered.push(cur[k]);
                }
                *cur = reordered;
            }
        }
    }
    Ok(GainSweepResult {
        epsilons,
        loci,
        infinite_counts,
    })
}

/// Upper bound on the modulus of any eigenvalue of `[z^2 Ahat - z I + A]`
/// for nonsingular `Ahat`:
/// `(1 + sqrt(1 + 4 sigma_min(Ahat) ||A||)) / (2 sigma_min(Ahat))`,
/// with the spectral norm instantiating the subordinate matrix norm
/// (`||Ahat^-1||^-1 = sigma_min(Ahat)`).
pub fn eig_bound_large_gain(model: &ModelCM, tol: &Tolerances) -> Result<f64> {
    let sv = model.ahat.clone().singular_values();
    let smin = sv.min();
    let smax = sv.max();
    if smax == 0.0 || smin <= tol.image_rank * smax {
        return Err(Error::SingularAhat);
    }
    let a_norm = linalg::spectral_norm(&model.a);
    Ok((1.0 + (1.0 + 4.0 * smin * a_norm).sqrt()) / (2.0 * smin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_nk, NKParams};
    use crate::tol::Tolerances;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn nk() -> ModelCM {
        build_nk(&NKParams::benchmark(), &tol()).unwrap()
    }

    #[test]
    fn benchmark_selection_is_determinate_with_published_af0() {
        let report = select_stability(&nk(), &tol()).unwrap();
        assert_eq!(report.classification, Determinacy::Determinate);
        let af0 = report.af0.unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.8665942, 0.3233551, -0.2015408, //
                1.4349934, -0.1388313, -0.2536809, //
                0.8975706, -0.0359379, -0.1647171,
            ],
        );
        assert!((af0 - expected).amax() < 1e-6);
        assert_eq!(report.unstable_eigs.len(), 2);
        assert!((report.unstable_eigs[0].norm() - 1.4461829).abs() < 1e-6);
        assert!((report.unstable_eigs[1].norm() - 1.0446352).abs() < 1e-6);
        assert!(report.g_spectral_radius.unwrap() < 1.0);
    }

    #[test]
    fn passive_policy_is_indeterminate() {
        let p = NKParams {
            psi1: 0.90,
            ..NKParams::benchmark()
        };
        let m = build_nk(&p, &tol()).unwrap();
        let report = select_stability(&m, &tol()).unwrap();
        assert_eq!(report.classification, Determinacy::Indeterminate);
        assert_eq!(report.unstable_eigs.len(), 1);
        assert!(report.af0.is_none());
    }

    #[test]
    fn stable_model_is_indeterminate_with_empty_constraints() {
        // sign-fixed active rules leave no unstable eigenvalue: every
        // admissible Ahat F0 solves the (empty) cancellation system
        let p = NKParams {
            psi2: 1.50,
            sign_fix: true,
            ..NKParams::benchmark()
        };
        let m = build_nk(&p, &tol()).unwrap();
        let report = select_stability(&m, &tol()).unwrap();
        assert_eq!(report.classification, Determinacy::Indeterminate);
        assert!(report.unstable_eigs.is_empty());
        assert_eq!(report.residual, 0.0);
    }

    #[test]
    fn least_squares_matches_published_projection() {
        let af0 = select_least_squares(&nk(), &tol()).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                -0.833, -0.155, 0.322, //
                -0.417, 0.469, -0.209, //
                -0.333, 0.239, -0.075,
            ],
        );
        assert!((af0.clone() - expected).amax() < 5e-4);
        // orthogonality of the resulting error coefficient
        let m = nk();
        let coeff = &af0 + &m.b;
        assert!((m.ahat.transpose() * coeff).amax() < 1e-10);
    }

    #[test]
    fn nonsingular_ahat_blocks_everything() {
        let m = ModelCM::new(
            DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.1, 0.2]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 0.8]),
            DMatrix::from_row_slice(2, 2, &[1.0, -0.4, 0.5, 0.3]),
            DMatrix::zeros(2, 2),
            &tol(),
        )
        .unwrap();
        let af0 = select_least_squares(&m, &tol()).unwrap();
        assert!((af0.clone() + &m.b).amax() < 1e-12);
    }

    #[test]
    fn orthogonal_b_projects_to_zero() {
        // Im Ahat = span(e1); B confined to e2
        let m = ModelCM::new(
            DMatrix::zeros(2, 2),
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            DMatrix::zeros(1, 1),
            &tol(),
        )
        .unwrap();
        let af0 = select_least_squares(&m, &tol()).unwrap();
        assert_eq!(af0.amax(), 0.0);
    }

    #[test]
    fn gain_sweep_endpoints_match_known_eigenvalues() {
        let m = nk();
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let sweep = gain_sweep(&m, &grid, &tol()).unwrap();
        let at0 = sweep.loci[0].as_ref().unwrap();
        let mut mods: Vec<f64> = at0.iter().map(|z| z.norm()).collect();
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(at0.len(), 3);
        assert!(mods[0] < 1e-9 && mods[1] < 1e-9);
        assert!((mods[2] - 0.4166667).abs() < 1e-6);
        let at1 = sweep.loci[4].as_ref().unwrap();
        assert!(at1.iter().any(|z| (z - Complex64::new(0.3343081, 0.0)).norm() < 1e-6));
        assert!(at1.iter().any(|z| (z - Complex64::new(1.4461829, 0.0)).norm() < 1e-6));
    }

    #[test]
    fn small_gain_eigenvalues_scale_as_reciprocal_gain() {
        let m = nk();
        let mus: Vec<Complex64> = m
            .ahat
            .complex_eigenvalues()
            .iter()
            .copied()
            .filter(|z| z.norm() > 1e-9)
            .collect();
        for eps in [1e-4, 1e-5] {
            let sweep = gain_sweep(&m, &[eps], &tol()).unwrap();
            let eigs = sweep.loci[0].as_ref().unwrap();
            let big: Vec<&Complex64> = eigs.iter().filter(|z| z.norm() > 10.0).collect();
            assert_eq!(big.len(), mus.len());
            for z in big {
                let gap = mus
                    .iter()
                    .map(|mu| (z * eps * mu - Complex64::new(1.0, 0.0)).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(gap < 1e-2, "eps={eps} gap={gap}");
            }
        }
    }

    #[test]
    fn large_gain_bound_trivial_cases() {
        let mk = |ahat: DMatrix<f64>, a: DMatrix<f64>| {
            ModelCM::new(
                a,
                ahat,
                DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
                DMatrix::zeros(1, 1),
                &tol(),
            )
            .unwrap()
        };
        let m1 = mk(DMatrix::identity(2, 2), DMatrix::zeros(2, 2));
        assert!((eig_bound_large_gain(&m1, &tol()).unwrap() - 1.0).abs() < 1e-12);
        let m2 = mk(DMatrix::identity(2, 2) * 2.0, DMatrix::zeros(2, 2));
        assert!((eig_bound_large_gain(&m2, &tol()).unwrap() - 0.5).abs() < 1e-12);
        // eigenvalues of z(2z - 1) rows: {0, 0.5} all within the bound
        let es = polyeig(&m2.char_matrix(), &tol()).unwrap();
        for z in es.finite {
            assert!(z.norm() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn singular_ahat_rejected_by_bound() {
        let m = nk();
        assert!(matches!(
            eig_bound_large_gain(&m, &tol()),
            Err(Error::SingularAhat)
        ));
    }

    #[test]
    fn left_vectors_annihilate_the_numerator_on_determinate_selection() {
        let m = nk();
        let report = select_stability(&m, &tol()).unwrap();
        let af0 = report.af0.unwrap();
        let coeff = (&af0 + &m.b).map(|x| Complex64::new(x, 0.0));
        let ahat = m.ahat.map(|x| Complex64::new(x, 0.0));
        let b = m.b.map(|x| Complex64::new(x, 0.0));
        let r = m.r.map(|x| Complex64::new(x, 0.0));
        let scale = m.b.amax();
        for (lam, c) in report.unstable_eigs.iter().zip(&report.left_vecs) {
            // N[lam] = lam [Ahat (Ahat F0 + B)(lam I - R) - B]
            let nmat = (&ahat * &coeff * (DMatrix::identity(3, 3).map(|x| Complex64::new(x, 0.0)) * *lam - &r)
                - &b)
                * *lam;
            let prod = c * nmat;
            let norm = prod.iter().map(|x| x.norm()).fold(0.0, f64::max);
            assert!(norm <= 1e-7 * scale, "lam={lam} norm={norm:.3e}");
        }
    }
}
