use thiserror::Error;

/// Errors reported by the analytical, simulation and study pipelines.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("noise standard deviation must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("list fraction alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),

    #[error("input must be finite, got {0}")]
    NonFiniteInput(f64),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("samples have zero variance")]
    ZeroVariance,

    #[error("input is not a permutation of 1..={0}")]
    NotAPermutation(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("k must lie in 1..={n}, got {k}")]
    KOutOfRange { k: usize, n: usize },

    #[error("need at least {needed} objects, got {got}")]
    TooFewObjects { needed: usize, got: usize },

    #[error("empirical distributions carry no density; fit a Gaussian via fit_from_samples first")]
    NoDensity,

    #[error("quadrature did not converge: estimate {estimate}, error bound {error}")]
    QuadratureNonConvergence { estimate: f64, error: f64 },

    #[error("overlap {f} infeasible for alpha {alpha}: feasible range is ({min}, 1)")]
    InfeasibleOverlap { f: f64, alpha: f64, min: f64 },

    #[error("saddle tilts must be positive, got {0}")]
    InvalidTilt(f64),

    #[error("saddle solve did not converge after {iterations} iterations, best residual norm {best_residual}")]
    SaddleNonConvergence { best_residual: f64, iterations: usize },

    #[error("singular Jacobian in saddle solve (residual norm {residual})")]
    SingularJacobian { residual: f64 },

    #[error("near-singular second-derivative matrices: |H| = {det_h}, |R| = {det_r}, conditioning {conditioning}")]
    NearSingularHessian { det_h: f64, det_r: f64, conditioning: f64 },

    #[error("correlation must lie strictly inside (-1, 1), got {0}")]
    CorrelationOutOfRange(f64),

    #[error("sample count must be at least 4, got {0}")]
    TooFewStudySamples(usize),

    #[error("noise-dominated data: observed variance {v_o} does not exceed noise variance {sigma2_noise}")]
    NoiseDominated { v_o: f64, sigma2_noise: f64 },

    #[error("reliability target unreachable below n = {n_max}")]
    TargetUnreachable { n_max: u64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("{failed} of {total} requested grid points failed; partial rows were written and flagged")]
    RowFailures { failed: usize, total: usize },

    #[error("{path}:{line}: {message}")]
    ScoreParse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
