//! Sample-size planning for ranked feature selection from noisy scores.
//!
//! Pearson correlations are mapped to absolute Fisher scores, whose
//! measurement noise is Gaussian with variance 1/(n - 3) around the true
//! value. The observed score variance V_o then splits into signal plus noise,
//! sigma_q^2 = V_o - 1/(n - 3), which feeds the overlap analytics: expected
//! top-list overlap as a function of the sample count n, and the smallest n
//! meeting an (epsilon, delta) reliability target.

use crate::dist::{fit_from_samples, ScoreDistribution};
use crate::error::{Error, Result};
use crate::tkl::{overlap_moments, overlap_reliability_from_moments, OverlapMoments};
use rayon::prelude::*;
use std::io::BufRead;
use std::path::Path;

/// Default planner search ceiling on the sample count.
pub const DEFAULT_N_MAX: u64 = 1_000_000;

/// Parameter bundle for a planned study.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StudyDesign {
    /// Number of ranked objects (e.g. features surviving prefiltering).
    pub n_objects: usize,
    /// Top-list fraction K/N.
    pub alpha: f64,
    /// Overlap shortfall tolerance: the target is overlap >= 1 - epsilon.
    pub epsilon: f64,
    /// Allowed failure probability: reliability must reach 1 - delta.
    pub delta: f64,
    /// Samples available (or planned); noise variance is 1/(n - 3).
    pub n_samples: u64,
}

impl StudyDesign {
    pub fn new(
        n_objects: usize,
        alpha: f64,
        epsilon: f64,
        delta: f64,
        n_samples: u64,
    ) -> Result<Self> {
        if n_samples < 4 {
            return Err(Error::TooFewStudySamples(n_samples as usize));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        let k = (alpha * n_objects as f64).round();
        if !(1.0..=n_objects as f64).contains(&k) {
            return Err(Error::InvalidAlpha(alpha));
        }
        for frac in [epsilon, delta] {
            if !(frac > 0.0 && frac < 1.0) {
                return Err(Error::InvalidFraction(frac));
            }
        }
        Ok(Self {
            n_objects,
            alpha,
            epsilon,
            delta,
            n_samples,
        })
    }
}

/// Signal/noise split of observed Fisher scores.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SignalEstimate {
    /// Unbiased variance of the observed scores.
    pub v_o: f64,
    /// Measurement noise variance 1/(n - 3).
    pub sigma2_noise: f64,
    /// Inferred true-score variance V_o - sigma2_noise.
    pub sigma2_q: f64,
    pub n_samples: u64,
    /// Mean of the fitted Gaussian; irrelevant to all similarity results
    /// (ranking is shift invariant) but kept for reporting.
    pub mean: f64,
    /// Gaussian model of the true scores.
    pub signal: ScoreDistribution,
}

/// Absolute Fisher score |atanh(c)| of a correlation coefficient.
pub fn fisher_score(c: f64) -> Result<f64> {
    if !c.is_finite() || c.abs() >= 1.0 {
        return Err(Error::CorrelationOutOfRange(c));
    }
    // atanh on |c| keeps the +-c symmetry exact at the ulp level
    Ok(c.abs().atanh())
}

/// Variance of a Fisher score measured from n samples: 1/(n - 3).
pub fn noise_variance(n_samples: u64) -> Result<f64> {
    if n_samples < 4 {
        return Err(Error::TooFewStudySamples(n_samples as usize));
    }
    Ok(1.0 / (n_samples as f64 - 3.0))
}

/// Split observed Fisher-score variance into signal and noise.
pub fn estimate_signal(observed_scores: &[f64], n_samples: u64) -> Result<SignalEstimate> {
    let sigma2_noise = noise_variance(n_samples)?;
    let fit = fit_from_samples(observed_scores)?;
    let v_o = fit.observed_variance;
    let sigma2_q = v_o - sigma2_noise;
    if sigma2_q <= 0.0 {
        return Err(Error::NoiseDominated { v_o, sigma2_noise });
    }
    Ok(SignalEstimate {
        v_o,
        sigma2_noise,
        sigma2_q,
        n_samples,
        mean: fit.mean,
        signal: ScoreDistribution::gaussian(fit.mean, sigma2_q.sqrt())?,
    })
}

/// One point of the overlap-versus-sample-size curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CurvePoint {
    pub n_samples: u64,
    pub sigma: f64,
    pub f0: f64,
    pub sigma_f: f64,
}

/// Expected-overlap curve; points that failed to solve are reported
/// separately instead of poisoning the rest.
#[derive(Debug, Clone)]
pub struct OverlapCurve {
    pub points: Vec<CurvePoint>,
    pub failures: Vec<(u64, Error)>,
}

/// Expected overlap and its width across a range of sample counts, at fixed
/// signal strength sigma_q and list fraction alpha.
pub fn expected_overlap_curve(
    sigma_q: f64,
    alpha: f64,
    n_objects: usize,
    n_range: &[u64],
) -> Result<OverlapCurve> {
    let q = ScoreDistribution::gaussian(0.0, sigma_q)?;
    let results: Vec<(u64, Result<CurvePoint>)> = n_range
        .par_iter()
        .map(|&n| {
            let point = noise_variance(n).and_then(|var| {
                let sigma = var.sqrt();
                let m = overlap_moments(&q, sigma, alpha, n_objects)?;
                Ok(CurvePoint {
                    n_samples: n,
                    sigma,
                    f0: m.f0,
                    sigma_f: m.sigma_f(),
                })
            });
            (n, point)
        })
        .collect();

    let mut curve = OverlapCurve {
        points: Vec::new(),
        failures: Vec::new(),
    };
    for (n, r) in results {
        match r {
            Ok(p) => curve.points.push(p),
            Err(e) => curve.failures.push((n, e)),
        }
    }
    curve.points.sort_by_key(|p| p.n_samples);
    Ok(curve)
}

/// One reliability probe made by the planner.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PlanProbe {
    pub n_samples: u64,
    pub reliability: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SampleSizePlan {
    /// Smallest n meeting the reliability target.
    pub n_star: u64,
    /// Every (n, reliability) probe of the bracket-and-bisect search.
    pub trace: Vec<PlanProbe>,
}

/// Smallest n >= 4 with Pr(overlap >= 1 - epsilon) >= 1 - delta, by
/// exponential bracketing and bisection (the criterion is monotone in n).
/// On return the criterion holds at n_star and fails at n_star - 1.
pub fn plan_sample_size(
    sigma_q: f64,
    alpha: f64,
    n_objects: usize,
    epsilon: f64,
    delta: f64,
    n_max: u64,
) -> Result<SampleSizePlan> {
    for frac in [epsilon, delta] {
        if !(frac > 0.0 && frac < 1.0) {
            return Err(Error::InvalidFraction(frac));
        }
    }
    let q = ScoreDistribution::gaussian(0.0, sigma_q)?;
    let mut trace = Vec::new();
    let mut probe = |n: u64| -> Result<bool> {
        let sigma = noise_variance(n)?.sqrt();
        let m = overlap_moments(&q, sigma, alpha, n_objects)?;
        let reliability = overlap_reliability_from_moments(&m, epsilon);
        let satisfied = reliability >= 1.0 - delta;
        trace.push(PlanProbe {
            n_samples: n,
            reliability,
            satisfied,
        });
        Ok(satisfied)
    };

    if probe(4)? {
        return Ok(SampleSizePlan { n_star: 4, trace });
    }
    let mut lo = 4u64; // criterion known false here
    let mut hi = 8u64;
    loop {
        if hi >= n_max {
            hi = n_max;
            if !probe(hi)? {
                return Err(Error::TargetUnreachable { n_max });
            }
            break;
        }
        if probe(hi)? {
            break;
        }
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if probe(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(SampleSizePlan { n_star: hi, trace })
}

/// Score file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ScoreFormat {
    /// One score per line (a leading `id,` is tolerated).
    Plain,
    /// `id,score` lines.
    CsvWithId,
    /// Raw Pearson correlations in (-1, 1); Fisher-transformed on ingestion.
    Correlations,
}

impl std::str::FromStr for ScoreFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "plain" => Ok(Self::Plain),
            "csv-with-id" => Ok(Self::CsvWithId),
            "correlations" => Ok(Self::Correlations),
            other => Err(format!(
                "unknown score format '{other}' (expected plain, csv-with-id or correlations)"
            )),
        }
    }
}

/// Read scores from a text file: one record per line, `score` or `id,score`;
/// lines starting with `#` are ignored. Parse failures carry line numbers.
pub fn ingest_scores(path: &Path, format: ScoreFormat) -> Result<Vec<f64>> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: display.clone(),
        message: e.to_string(),
    })?;
    let reader = std::io::BufReader::new(file);

    let mut scores = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Io {
            path: display.clone(),
            message: format!("line {line_no}: {e}"),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let value_field = match (format, fields.len()) {
            (ScoreFormat::CsvWithId, 2) => fields[1],
            (ScoreFormat::CsvWithId, _) => {
                return Err(Error::ScoreParse {
                    path: display,
                    line: line_no,
                    message: format!("expected 'id,score', got '{trimmed}'"),
                })
            }
            (_, 1) => fields[0],
            (_, 2) => fields[1],
            _ => {
                return Err(Error::ScoreParse {
                    path: display,
                    line: line_no,
                    message: format!("expected at most two comma-separated fields, got '{trimmed}'"),
                })
            }
        };
        let value: f64 = value_field.parse().map_err(|_| Error::ScoreParse {
            path: display.clone(),
            line: line_no,
            message: format!("cannot parse '{value_field}' as a number"),
        })?;
        if !value.is_finite() {
            return Err(Error::ScoreParse {
                path: display,
                line: line_no,
                message: format!("non-finite value {value}"),
            });
        }
        let score = match format {
            ScoreFormat::Correlations => fisher_score(value).map_err(|e| Error::ScoreParse {
                path: display.clone(),
                line: line_no,
                message: e.to_string(),
            })?,
            _ => value,
        };
        scores.push(score);
    }
    Ok(scores)
}

/// Overlap moments for a study at its current sample count.
pub fn design_moments(sigma_q: f64, design: &StudyDesign) -> Result<OverlapMoments> {
    let q = ScoreDistribution::gaussian(0.0, sigma_q)?;
    let sigma = noise_variance(design.n_samples)?.sqrt();
    overlap_moments(&q, sigma, design.alpha, design.n_objects)
}
