//! Numerical tolerances.
//!
//! Every floating-point decision made by the toolkit (rank cuts, properness
//! thresholds, stability margins) reads its threshold from a single
//! [`Tolerances`] record, threaded through the operations that need it.

/// Tolerance knobs for all numerical decisions.
///
/// All `*_rank` fields are relative to the largest singular value of the
/// matrix being tested; residual fields are relative to a scale stated at the
/// point of use.
#[derive(Debug, Clone)]
pub struct Tolerances {
    /// Determinant coefficients below `det_coeff_floor * max input magnitude`
    /// are snapped to zero before the polynomial degree is determined.
    pub det_coeff_floor: f64,
    /// Rank-deficiency threshold for [`left_nullvector`]: the smallest
    /// singular value must not exceed `null_rank` times the largest.
    ///
    /// [`left_nullvector`]: crate::polyalg::left_nullvector
    pub null_rank: f64,
    /// Magnitude threshold (relative to sampled gain) below which a rational
    /// matrix counts as identically zero, hence strictly proper.
    pub properness_eps: f64,
    /// Fitted growth exponent at or above which an entry is improper.
    pub improper_exponent: f64,
    /// Minimum distance between a properness sample point and a denominator
    /// eigenvalue before the sample is retried.
    pub pole_collision: f64,
    /// Relative singular-value cutoff for the block-Hankel rank decision in
    /// minimal realization.  Pole-zero cancellation detection depends on it.
    pub hankel_rank: f64,
    /// Relative rank cutoff for column-span (image) bases.
    pub image_rank: f64,
    /// Residual bound, relative to `1 + ||v||`, for membership of a vector in
    /// a column span.
    pub image_residual: f64,
    /// Rank tolerance for the well-posedness test `rank(Ahat) = rank(Ahat^2)`.
    pub wellposed_rank: f64,
    /// Match tolerance, relative to `1 + ||xhat_prev||`, between term 0 of the
    /// zero-input expansion and `xhat_prev`.
    pub consistency_term0: f64,
    /// Eigenvalues with `|z| > 1 + unstable_margin` count as unstable.
    pub unstable_margin: f64,
    /// Eigenvalues with `||z| - 1| <= boundary_band` trigger the `Boundary`
    /// determinacy classification instead of a guess.
    pub boundary_band: f64,
    /// Residual threshold (relative to the stacked right-hand side) for the
    /// pole-zero cancellation system to count as solvable.
    pub exist_residual: f64,
    /// Minimum distance between an unstable eigenvalue and the spectrum of
    /// `R` (the cancellation system inverts `lambda I - R`).
    pub eig_on_r: f64,
    /// Relative clustering width for detecting repeated eigenvalues.
    pub eig_cluster: f64,
    /// Verification bound for generalized inverses and least-squares
    /// orthogonality.
    pub pinv_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            det_coeff_floor: 1e-11,
            null_rank: 1e-8,
            properness_eps: 1e-7,
            improper_exponent: 0.5,
            pole_collision: 1e-6,
            hankel_rank: 1e-7,
            image_rank: 1e-10,
            image_residual: 1e-9,
            wellposed_rank: 1e-10,
            consistency_term0: 1e-8,
            unstable_margin: 1e-8,
            boundary_band: 1e-6,
            exist_residual: 1e-7,
            eig_on_r: 1e-6,
            eig_cluster: 1e-8,
            pinv_residual: 1e-10,
        }
    }
}
