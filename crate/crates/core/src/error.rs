//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Matrix dimensions do not compose.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A square matrix polynomial has identically zero determinant.
    #[error("matrix polynomial is not regular (determinant vanishes identically)")]
    NotRegular,
    /// `left_nullvector` was called on a numerically full-rank matrix.
    #[error("matrix is numerically full rank (smallest/largest singular value {0:.3e})")]
    FullRank(f64),
    /// Properness sampling landed on a denominator eigenvalue repeatedly.
    #[error("properness sample point within {0:.1e} of a denominator eigenvalue after 3 retries")]
    SamplePoleCollision(f64),
    /// An improper rational matrix reached an operation that needs a causal
    /// expansion.  Carries the offending entry and its fitted growth exponent.
    #[error("rational matrix is improper: entry ({row},{col}) grows with exponent {exponent:.3}")]
    ImproperInput {
        row: usize,
        col: usize,
        exponent: f64,
    },
    /// The Hankel matrix used for realization was full rank, so the system
    /// order could not be certified.
    #[error("realization hint {0} too small: Hankel matrix has full rank")]
    HintTooSmall(usize),
    /// The structural matrix of a model builder is singular.
    #[error("structural matrix is singular and cannot be normalized")]
    SingularStructure,
    /// `build_taylor` needs a nonzero coefficient.
    #[error("delta1 must be nonzero")]
    ZeroDelta,
    /// `Ahat` must be nonzero for the model class to make sense.
    #[error("Ahat is identically zero")]
    ZeroAhat,
    /// The rank test and the sampling test for well-posedness disagree.
    #[error("well-posedness tests disagree: rank test says {rank_test}, properness sampling says {sampling_test}")]
    AmbiguousWellPosedness {
        rank_test: bool,
        sampling_test: bool,
    },
    /// No model-consistent forecasting mechanism exists for this free
    /// parameter (the forecast transfer matrix is improper).
    #[error("no model-consistent solution: F[z] entry ({row},{col}) is improper with growth exponent {exponent:.3}")]
    NoSolution {
        row: usize,
        col: usize,
        exponent: f64,
    },
    /// The requested free parameter does not lie in the column span of `Ahat`.
    #[error("Ahat*F0 column {col} lies outside the image of Ahat (residual {residual:.3e})")]
    NotInImage { col: usize, residual: f64 },
    /// Initial conditions are not consistent, so no total solution exists.
    #[error("initial conditions are inconsistent with a perfect-foresight path")]
    InconsistentInitialConditions,
    /// The model fails the well-posedness test required by the operation.
    #[error("model is not well-posed")]
    NotWellPosed,
    /// The initial conditions fail weak consistency.
    #[error("initial conditions are not weakly consistent")]
    NotWeaklyConsistent,
    /// A shock covariance matrix has a negative eigenvalue.
    #[error("shock covariance is not positive semidefinite (eigenvalue {0:.3e})")]
    CovarianceNotPsd(f64),
    /// An unstable eigenvalue coincides with an eigenvalue of `R`.
    #[error("unstable eigenvalue {0} coincides with an eigenvalue of R")]
    EigenvalueOnR(num_complex::Complex<f64>),
    /// A repeated unstable eigenvalue has a deficient eigenspace.
    #[error("defective unstable eigenvalue {eigenvalue} (multiplicity {multiplicity}, eigenspace dimension {nullity})")]
    DefectiveUnstable {
        eigenvalue: num_complex::Complex<f64>,
        multiplicity: usize,
        nullity: usize,
    },
    /// `eig_bound_large_gain` needs a nonsingular `Ahat`.
    #[error("Ahat is singular; the large-gain eigenvalue bound requires a nonsingular Ahat")]
    SingularAhat,
    /// A determinate selection failed its stability post-verification.
    #[error("determinate selection failed verification: realized G[z] has spectral radius {0:.6}")]
    StabilityVerificationFailed(f64),
    /// Free parameters passed to the general solver have the wrong shape.
    #[error("invalid free parameters: {0}")]
    InvalidFreeParams(String),
    /// An internal numerical step failed in a way that should not happen for
    /// admissible inputs.
    #[error("numerical failure: {0}")]
    Numerical(String),
}
