//! Score distributions q(r), the Gaussian noise model, and the elementary
//! probability kernels the analytical modules are built on.
//!
//! All integrals of the form `int q(r) g(r) dr` elsewhere in the crate run
//! through [`ScoreDistribution::density_fn`] and the adaptive integrator in
//! [`crate::quad`]. Infinite Gaussian supports are truncated to mean +- 8
//! standard deviations; the mass beyond that is below 1e-15, far under every
//! tolerance used here.

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
#[allow(clippy::excessive_precision)]
const INV_SQRT_2PI: f64 = 0.39894228040143267794;

/// Width of the truncated support of a Gaussian score distribution, in
/// standard deviations on each side of the mean.
pub const GAUSSIAN_SUPPORT_SIGMAS: f64 = 8.0;

/// Standard normal CDF, built on the complementary error function.
///
/// Total function: accepts any real including +-infinity; absolute error
/// is at the level of the underlying erfc (~1 ulp), well below 1e-12.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Standard normal survival function 1 - Phi(z), accurate in the upper tail.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal quantile (lower tail): returns z with Phi(z) = p.
///
/// Acklam's rational approximation polished by two Halley steps against
/// [`normal_cdf`]; absolute error below 1e-13 across (0, 1).
#[allow(clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidFraction(p));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let mut x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p > 1.0 - P_LOW {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..2 {
        // Halley: quadratic-rate polish using the high-precision CDF
        let err = if x > 0.0 { -(normal_sf(x) - (1.0 - p)) } else { normal_cdf(x) - p };
        let u = err / normal_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

/// Probability that an object with true score `r` is *not* selected at
/// threshold `x` under noise level `sigma`: Phi((x - r) / sigma).
pub fn miss_prob(x: f64, r: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    Ok(normal_cdf((x - r) / sigma))
}

/// Zero-mean Gaussian measurement noise of standard deviation `sigma`.
///
/// `sigma = 0` is admitted for exact/limit operations (the simulator treats
/// it as a noiseless pass); the analytical solvers require `sigma > 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseModel {
    sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::NonPositiveSigma(sigma));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
enum Kind {
    Gaussian { mean: f64, sigma_q: f64 },
    Empirical { samples: Vec<f64> },
}

/// Distribution of the true object scores.
///
/// Either a parametric Gaussian (the form the analytical modules need) or an
/// empirical sample set (quantiles only; route through
/// [`fit_from_samples`] before using it analytically).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScoreDistribution {
    kind: Kind,
}

impl ScoreDistribution {
    pub fn gaussian(mean: f64, sigma_q: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::NonFiniteInput(mean));
        }
        if !(sigma_q > 0.0) || !sigma_q.is_finite() {
            return Err(Error::NonPositiveSigma(sigma_q));
        }
        Ok(Self {
            kind: Kind::Gaussian { mean, sigma_q },
        })
    }

    /// Empirical distribution from at least 30 finite scores; samples are
    /// stored sorted ascending.
    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 30 {
            return Err(Error::InsufficientSamples {
                needed: 30,
                got: samples.len(),
            });
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(*bad));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self {
            kind: Kind::Empirical { samples },
        })
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.kind, Kind::Gaussian { .. })
    }

    /// (mean, sigma_q) of a Gaussian distribution; `NoDensity` otherwise.
    pub fn as_gaussian(&self) -> Result<(f64, f64)> {
        match &self.kind {
            Kind::Gaussian { mean, sigma_q } => Ok((*mean, *sigma_q)),
            Kind::Empirical { .. } => Err(Error::NoDensity),
        }
    }

    /// Quadrature support [a, b]: mean +- 8 sigma for the Gaussian kind,
    /// the sample range for the empirical kind.
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            Kind::Gaussian { mean, sigma_q } => (
                mean - GAUSSIAN_SUPPORT_SIGMAS * sigma_q,
                mean + GAUSSIAN_SUPPORT_SIGMAS * sigma_q,
            ),
            Kind::Empirical { samples } => (samples[0], *samples.last().unwrap()),
        }
    }

    /// Density evaluator; errors for the empirical kind, which carries none.
    pub fn density_fn(&self) -> Result<impl Fn(f64) -> f64 + '_> {
        let (mean, sigma_q) = self.as_gaussian()?;
        Ok(move |r: f64| normal_pdf((r - mean) / sigma_q) / sigma_q)
    }

    /// Cumulative probability Pr(score <= r).
    pub fn cdf(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Gaussian { mean, sigma_q } => normal_cdf((r - mean) / sigma_q),
            Kind::Empirical { samples } => {
                let below = samples.partition_point(|s| *s <= r);
                below as f64 / samples.len() as f64
            }
        }
    }

    /// Upper-tail probability Pr(score > r), accurate in the tail for the
    /// Gaussian kind.
    pub fn survival(&self, r: f64) -> f64 {
        match &self.kind {
            Kind::Gaussian { mean, sigma_q } => normal_sf((r - mean) / sigma_q),
            Kind::Empirical { .. } => 1.0 - self.cdf(r),
        }
    }

    /// Upper-tail quantile r_alpha: the threshold with mass `alpha` above it,
    /// i.e. the integral of q from r_alpha to b equals alpha.
    ///
    /// For the empirical kind this is the right-continuous inverse of the
    /// empirical CDF at 1 - alpha: the smallest sample admitting at most
    /// `ceil(alpha * m)` samples at or above it.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidFraction(alpha));
        }
        match &self.kind {
            Kind::Gaussian { mean, sigma_q } => {
                Ok(mean - sigma_q * normal_quantile(alpha)?)
            }
            Kind::Empirical { samples } => {
                let m = samples.len();
                let idx = ((m as f64) * (1.0 - alpha)).floor() as usize;
                Ok(samples[idx.min(m - 1)])
            }
        }
    }
}

/// Result of fitting a Gaussian to observed scores.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit {
    /// Fitted Gaussian with the sample mean and standard deviation.
    pub distribution: ScoreDistribution,
    pub mean: f64,
    /// Unbiased sample variance V_o of the input scores.
    pub observed_variance: f64,
}

/// Fit a Gaussian score distribution to raw scores (sample mean, unbiased
/// sample variance). Requires at least 30 finite scores with nonzero spread.
pub fn fit_from_samples(scores: &[f64]) -> Result<GaussianFit> {
    if scores.len() < 30 {
        return Err(Error::InsufficientSamples {
            needed: 30,
            got: scores.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput(*bad));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let ss = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>();
    let variance = ss / (n - 1.0);
    if variance <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(GaussianFit {
        distribution: ScoreDistribution::gaussian(mean, variance.sqrt())?,
        mean,
        observed_variance: variance,
    })
}
