//! Ranking simulation: the empirical oracle for the analytical modules.
//!
//! One draw of true scores, then for every noise level on the grid a batch of
//! independent noisy re-rankings whose exact similarity statistics (tau and
//! top-K overlap) are recorded. Every (sigma index, iteration) pair draws
//! from its own counter-keyed substream, so results are bit-identical across
//! thread counts and execution orders.

use crate::dist::{NoiseModel, ScoreDistribution};
use crate::error::{Error, Result};
use crate::kendall::exact_tau;
use crate::rng::CounterStream;
use crate::tkl::exact_overlap;
use rayon::prelude::*;

/// Substream lane reserved for drawing the true score vector.
const SCORE_LANE: u64 = u64::MAX;

/// Retain raw (tau, f) samples only while the total record count stays under
/// this bound, unless the config says otherwise.
const SAMPLE_RETENTION_LIMIT: usize = 1_000_000;

/// Where the true scores come from.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum ScoreSource {
    /// Draw N i.i.d. scores from the distribution once per run.
    Distribution(ScoreDistribution),
    /// Use this exact score vector.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimulationConfig {
    pub n_objects: usize,
    /// Top-list size for the overlap statistic.
    pub k: usize,
    /// Strictly increasing noise standard deviations (sigma = 0 allowed).
    pub sigma_grid: Vec<f64>,
    /// Noisy re-rankings per grid point.
    pub n_iterations: usize,
    pub seed: u64,
    pub score_source: ScoreSource,
    /// Redraw the true scores at every grid point (sensitivity studies).
    /// Off by default: one draw serves the whole grid.
    #[serde(default)]
    pub redraw_scores_per_sigma: bool,
    /// Force raw sample retention on or off; `None` retains automatically
    /// while n_iterations * |sigma_grid| stays within a memory bound.
    #[serde(default)]
    pub keep_samples: Option<bool>,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_objects < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 objects, got {}",
                self.n_objects
            )));
        }
        if self.k == 0 || self.k > self.n_objects {
            return Err(Error::KOutOfRange {
                k: self.k,
                n: self.n_objects,
            });
        }
        if self.n_iterations == 0 {
            return Err(Error::InvalidConfig("n_iterations must be positive".into()));
        }
        if self.sigma_grid.is_empty() {
            return Err(Error::InvalidConfig("sigma grid is empty".into()));
        }
        for pair in self.sigma_grid.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::InvalidConfig(
                    "sigma grid must be strictly increasing".into(),
                ));
            }
        }
        for &s in &self.sigma_grid {
            NoiseModel::new(s)?;
        }
        if let ScoreSource::Fixed(scores) = &self.score_source {
            if scores.len() != self.n_objects {
                return Err(Error::InvalidConfig(format!(
                    "fixed score vector has {} entries for {} objects",
                    scores.len(),
                    self.n_objects
                )));
            }
            if let Some(bad) = scores.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput(*bad));
            }
        }
        Ok(())
    }

    fn retain_samples(&self) -> bool {
        self.keep_samples.unwrap_or_else(|| {
            self.n_iterations.saturating_mul(self.sigma_grid.len()) <= SAMPLE_RETENTION_LIMIT
        })
    }
}

/// Noise grid stepped in variance: starts at sigma_min^2 and adds
/// delta_sigma_sq until sigma_max^2 is reached (the first value at or past
/// sigma_max^2 is included).
pub fn sigma_grid_from_variance_steps(
    sigma_min: f64,
    delta_sigma_sq: f64,
    sigma_max: f64,
) -> Result<Vec<f64>> {
    if !(sigma_min >= 0.0) || !(sigma_max > sigma_min) || !(delta_sigma_sq > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "bad variance stepping: sigma_min={sigma_min}, delta={delta_sigma_sq}, sigma_max={sigma_max}"
        )));
    }
    let mut grid = Vec::new();
    let target = sigma_max * sigma_max;
    let mut var = sigma_min * sigma_min;
    loop {
        grid.push(var.sqrt());
        if var >= target {
            break;
        }
        var += delta_sigma_sq;
    }
    Ok(grid)
}

/// Summary statistics at one noise level.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SigmaStats {
    pub sigma: f64,
    pub mean_tau: f64,
    pub se_tau: f64,
    pub var_tau: f64,
    pub mean_f: f64,
    pub se_f: f64,
    pub var_f: f64,
    /// Raw per-iteration (tau, f) pairs when retained.
    #[serde(skip)]
    pub samples: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SimulationResult {
    pub config: SimulationConfig,
    /// True scores actually used (the single draw, or the last redraw).
    pub true_scores: Vec<f64>,
    pub per_sigma: Vec<SigmaStats>,
}

/// Rank scores descending: rank 1 is the largest score; ties break by
/// ascending original index. Returns ranks indexed by object.
pub fn rank_scores(scores: &[f64]) -> Result<Vec<u32>> {
    if scores.len() < 2 {
        return Err(Error::TooFewObjects {
            needed: 2,
            got: scores.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput(*bad));
    }
    let mut order: Vec<u32> = (0..scores.len() as u32).collect();
    order.sort_unstable_by(|&i, &j| {
        scores[j as usize]
            .total_cmp(&scores[i as usize])
            .then(i.cmp(&j))
    });
    let mut ranks = vec![0u32; scores.len()];
    for (pos, &obj) in order.iter().enumerate() {
        ranks[obj as usize] = pos as u32 + 1;
    }
    Ok(ranks)
}

fn draw_scores(q: &ScoreDistribution, n: usize, stream: &mut CounterStream) -> Result<Vec<f64>> {
    if let Ok((mean, sigma_q)) = q.as_gaussian() {
        return Ok((0..n)
            .map(|_| mean + sigma_q * stream.standard_normal())
            .collect());
    }
    // empirical source: bootstrap resampling
    (0..n)
        .map(|_| {
            let u = stream.uniform();
            q.quantile(1.0 - u)
        })
        .collect()
}

fn moments(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64, f64) {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    let var = if n > 1 {
        values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };
    (mean, var, (var / nf).sqrt())
}

/// Run the full simulation procedure over the noise grid.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationResult> {
    config.validate()?;
    let retain = config.retain_samples();

    let base_scores = match &config.score_source {
        ScoreSource::Fixed(scores) => scores.clone(),
        ScoreSource::Distribution(q) => {
            let mut stream = CounterStream::new(config.seed, SCORE_LANE, 0);
            draw_scores(q, config.n_objects, &mut stream)?
        }
    };

    let mut per_sigma = Vec::with_capacity(config.sigma_grid.len());
    let mut true_scores = base_scores.clone();

    for (g, &sigma) in config.sigma_grid.iter().enumerate() {
        if config.redraw_scores_per_sigma {
            if let ScoreSource::Distribution(q) = &config.score_source {
                let mut stream = CounterStream::new(config.seed, SCORE_LANE, g as u64 + 1);
                true_scores = draw_scores(q, config.n_objects, &mut stream)?;
            }
        }
        let true_ranking = rank_scores(&true_scores)?;

        let pairs: Vec<(f64, f64)> = (0..config.n_iterations)
            .into_par_iter()
            .map(|iter| {
                let mut stream = CounterStream::new(config.seed, g as u64, iter as u64);
                let noisy: Vec<f64> = true_scores
                    .iter()
                    .map(|r| r + sigma * stream.standard_normal())
                    .collect();
                let observed = rank_scores(&noisy)?;
                Ok((
                    exact_tau(&true_ranking, &observed)?,
                    exact_overlap(&true_ranking, &observed, config.k)?,
                ))
            })
            .collect::<Result<_>>()?;

        let (mean_tau, var_tau, se_tau) = moments(pairs.iter().map(|p| p.0), pairs.len());
        let (mean_f, var_f, se_f) = moments(pairs.iter().map(|p| p.1), pairs.len());
        per_sigma.push(SigmaStats {
            sigma,
            mean_tau,
            se_tau,
            var_tau,
            mean_f,
            se_f,
            var_f,
            samples: retain.then_some(pairs),
        });
    }

    Ok(SimulationResult {
        config: config.clone(),
        true_scores,
        per_sigma,
    })
}

impl SimulationResult {
    /// CSV with one row per noise level, floats at full round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma,mean_tau,se_tau,var_tau,mean_f,se_f,var_f\n");
        for s in &self.per_sigma {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                s.sigma, s.mean_tau, s.se_tau, s.var_tau, s.mean_f, s.se_f, s.var_f
            ));
        }
        out
    }
}
