//! Batch commands behind the `rankstab` binary: analytic similarity curves,
//! ranking simulation, and sample-size planning.
//!
//! Every run resolves its parameters (command line over config file over
//! defaults), computes in memory, then stages each output file and renames it
//! into place, accompanied by a manifest (full parameter set, seed, version,
//! output digests) sufficient to reproduce the run byte for byte.

use crate::dist::ScoreDistribution;
use crate::error::{Error, Result};
use crate::kendall;
use crate::montecarlo::{self, ScoreSource, SimulationConfig};
use crate::study::{self, ScoreFormat, StudyDesign};
use crate::tkl;
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "rankstab",
    version,
    about = "Ranking stability under additive Gaussian noise: analytics, simulation, study planning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analytical similarity moments over a noise grid (CSV/JSON plot data)
    Analyze(AnalyzeArgs),
    /// Monte-Carlo ranking simulation over a noise grid
    Simulate(SimulateArgs),
    /// Sample-size planning from a signal estimate or a score file
    Plan(PlanArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SharedArgs {
    /// Output directory [default: .]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format: csv or json [default: csv]
    #[arg(long)]
    pub format: Option<OutputFormat>,
    /// Optional key = value config file; explicit flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for the simulation substreams [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker thread cap [default: available cores]
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    /// Standard deviation of the true-score Gaussian [default: 1]
    #[arg(long)]
    pub sigma_q: Option<f64>,
    /// Mean of the true-score Gaussian [default: 0]
    #[arg(long)]
    pub mean: Option<f64>,
    /// Comma-separated noise standard deviations, e.g. 0.5,1,2
    #[arg(long)]
    pub sigma: Option<String>,
    /// Top-list fraction K/N [default: 0.1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of ranked objects [default: 1000]
    #[arg(long)]
    pub n_objects: Option<usize>,
    /// Measures to compute: tau, tkl or both [default: both]
    #[arg(long)]
    pub measure: Option<Measure>,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    /// Number of ranked objects [default: 1000]
    #[arg(long)]
    pub n_objects: Option<usize>,
    /// Top-list size K; overrides --alpha
    #[arg(long)]
    pub k: Option<usize>,
    /// Top-list fraction K/N, used when --k is absent [default: 0.1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated noise standard deviations (0 allowed)
    #[arg(long)]
    pub sigma: Option<String>,
    /// Variance-stepped grid start (with --delta-sigma-sq and --sigma-max)
    #[arg(long)]
    pub sigma_min: Option<f64>,
    /// Variance increment for the stepped grid
    #[arg(long)]
    pub delta_sigma_sq: Option<f64>,
    /// Variance-stepped grid end
    #[arg(long)]
    pub sigma_max: Option<f64>,
    /// Noisy re-rankings per grid point [default: 1000]
    #[arg(long)]
    pub n_iterations: Option<usize>,
    /// Standard deviation of the Gaussian score source [default: 1]
    #[arg(long)]
    pub sigma_q: Option<f64>,
    /// Mean of the Gaussian score source [default: 0]
    #[arg(long)]
    pub mean: Option<f64>,
    /// Fixed true-score file (plain format); replaces the Gaussian source
    #[arg(long)]
    pub scores_file: Option<PathBuf>,
    /// Redraw true scores at every grid point [default: false]
    #[arg(long)]
    pub redraw_per_sigma: bool,
    /// Force raw sample retention on/off [default: automatic]
    #[arg(long)]
    pub keep_samples: Option<bool>,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Args, Debug, Clone)]
pub struct PlanArgs {
    /// True-score standard deviation; alternative to --scores-file
    #[arg(long)]
    pub sigma_q: Option<f64>,
    /// Observed score file; requires --n-samples
    #[arg(long)]
    pub scores_file: Option<PathBuf>,
    /// Score file layout: plain, csv-with-id or correlations [default: plain]
    #[arg(long)]
    pub score_format: Option<ScoreFormat>,
    /// Samples behind the observed scores (noise variance 1/(n-3))
    #[arg(long)]
    pub n_samples: Option<u64>,
    /// Top-list fraction K/N [default: 0.01]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Overlap shortfall tolerance; target overlap is 1 - epsilon [default: 0.5]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Allowed failure probability [default: 0.1]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of ranked objects [default: score count from --scores-file]
    #[arg(long)]
    pub n_objects: Option<usize>,
    /// Planner search ceiling [default: 1000000]
    #[arg(long)]
    pub n_max: Option<u64>,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Tau,
    Tkl,
    Both,
}

impl std::str::FromStr for Measure {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tau" => Ok(Self::Tau),
            "tkl" => Ok(Self::Tkl),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown measure '{other}' (expected tau, tkl or both)")),
        }
    }
}

/// Flat key = value config file; `#` starts a comment.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut values = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidConfig(format!(
                    "{}:{}: expected key = value, got '{line}'",
                    path.display(),
                    idx + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                Error::InvalidConfig(format!("config key '{key}': cannot parse '{raw}'"))
            }),
        }
    }
}

/// Flag value if given, else config value, else default.
fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    config: &ConfigFile,
    key: &str,
    default: T,
) -> Result<T> {
    Ok(flag.or(config.get(key)?).unwrap_or(default))
}

fn resolve_opt<T: std::str::FromStr>(
    flag: Option<T>,
    config: &ConfigFile,
    key: &str,
) -> Result<Option<T>> {
    Ok(flag.or(config.get(key)?))
}

fn parse_sigma_list(raw: &str) -> Result<Vec<f64>> {
    let sigmas: std::result::Result<Vec<f64>, _> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect();
    let sigmas = sigmas.map_err(|_| Error::InvalidConfig(format!("bad sigma list '{raw}'")))?;
    if sigmas.is_empty() {
        return Err(Error::InvalidConfig("empty sigma grid".into()));
    }
    Ok(sigmas)
}

/// Run manifest: everything needed to reproduce the output files exactly.
#[derive(Debug, serde::Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub duration_seconds: f64,
    /// file name -> sha256 of its bytes
    pub outputs: BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Stage-then-rename write; the final name never holds partial content.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: dir.join(name).display().to_string(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let staged = dir.join(format!(".{name}.staged"));
    std::fs::write(&staged, bytes).map_err(io_err)?;
    std::fs::rename(&staged, dir.join(name)).map_err(io_err)?;
    Ok(())
}

struct RunWriter {
    dir: PathBuf,
    started: std::time::Instant,
    outputs: BTreeMap<String, String>,
}

impl RunWriter {
    fn new(dir: PathBuf) -> Self {
        Self {
            dir,
            started: std::time::Instant::now(),
            outputs: BTreeMap::new(),
        }
    }

    fn stage(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir, name, bytes)?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn manifest(
        &self,
        command: &str,
        parameters: serde_json::Value,
        seed: Option<u64>,
    ) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            parameters,
            seed,
            duration_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs.clone(),
        }
    }

    fn finish(mut self, command: &str, parameters: serde_json::Value, seed: Option<u64>) -> Result<()> {
        let manifest = self.manifest(command, parameters, seed);
        let bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        self.stage("manifest.json", &bytes)?;
        Ok(())
    }
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn with_thread_cap<T>(threads: Option<usize>, run: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match threads {
        None => run(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .expect("thread pool")
            .install(run),
    }
}

#[derive(serde::Serialize)]
struct AnalyzeRow {
    sigma: f64,
    sigma_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    f0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Analytical similarity curves across a noise grid.
pub fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let config = ConfigFile::load(args.shared.config.as_deref())?;
    let sigma_q = resolve(args.sigma_q, &config, "sigma-q", 1.0)?;
    let mean = resolve(args.mean, &config, "mean", 0.0)?;
    let alpha = resolve(args.alpha, &config, "alpha", 0.1)?;
    let n_objects = resolve(args.n_objects, &config, "n-objects", 1000)?;
    let measure = resolve(args.measure, &config, "measure", Measure::Both)?;
    let out = resolve(args.shared.out, &config, "out", PathBuf::from("."))?;
    let format = resolve(args.shared.format, &config, "format", OutputFormat::Csv)?;
    let threads = resolve_opt(args.shared.threads, &config, "threads")?;
    let sigma_raw: Option<String> = resolve_opt(args.sigma, &config, "sigma")?;
    let sigmas = parse_sigma_list(
        sigma_raw
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("--sigma is required".into()))?,
    )?;

    let q = ScoreDistribution::gaussian(mean, sigma_q)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    for &s in &sigmas {
        if !(s > 0.0) {
            return Err(Error::NonPositiveSigma(s));
        }
    }

    let rows: Vec<AnalyzeRow> = with_thread_cap(threads, || {
        sigmas
            .iter()
            .map(|&sigma| {
                let mut row = AnalyzeRow {
                    sigma,
                    sigma_ratio: sigma_q / sigma,
                    mu_tau: None,
                    sigma_tau: None,
                    f0: None,
                    sigma_f: None,
                    error: None,
                };
                let mut record = |e: Error| {
                    row_error(&mut row.error, e);
                };
                if matches!(measure, Measure::Tau | Measure::Both) {
                    match kendall::tau_moments(&q, sigma, n_objects) {
                        Ok(m) => {
                            row.mu_tau = Some(m.mu_tau);
                            row.sigma_tau = Some(m.sigma2_tau.sqrt());
                        }
                        Err(e) => record(e),
                    }
                }
                if matches!(measure, Measure::Tkl | Measure::Both) {
                    match tkl::overlap_moments(&q, sigma, alpha, n_objects) {
                        Ok(m) => {
                            row.f0 = Some(m.f0);
                            row.sigma_f = Some(m.sigma_f());
                        }
                        Err(e) => record(e),
                    }
                }
                row
            })
            .collect()
    });

    let parameters = serde_json::json!({
        "sigma_q": sigma_q,
        "mean": mean,
        "sigma": sigmas,
        "alpha": alpha,
        "n_objects": n_objects,
        "measure": measure,
        "format": format,
    });

    let mut writer = RunWriter::new(out);
    match format {
        OutputFormat::Csv => {
            let mut csv = String::from("sigma_ratio,mu_tau,sigma_tau,f0,sigma_f\n");
            for row in &rows {
                csv.push_str(&format!(
                    "{:.16e},{},{},{},{}\n",
                    row.sigma_ratio,
                    fmt_cell(row.mu_tau),
                    fmt_cell(row.sigma_tau),
                    fmt_cell(row.f0),
                    fmt_cell(row.sigma_f),
                ));
            }
            writer.stage("curve.csv", csv.as_bytes())?;
            writer.finish("analyze", parameters, None)?;
        }
        OutputFormat::Json => {
            let manifest = writer.manifest("analyze", parameters, None);
            let doc = serde_json::json!({ "manifest": manifest, "results": { "rows": rows } });
            writer.stage("analyze.json", &serde_json::to_vec_pretty(&doc).unwrap())?;
        }
    }

    // partial rows are written and flagged, never silently dropped; the run
    // still fails so callers notice
    for row in &rows {
        if let Some(msg) = &row.error {
            eprintln!("analyze: sigma = {}: {msg}", row.sigma);
        }
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Err(Error::RowFailures {
            failed,
            total: rows.len(),
        });
    }
    Ok(())
}

fn row_error(slot: &mut Option<String>, e: Error) {
    let msg = e.to_string();
    match slot {
        Some(existing) => {
            existing.push_str("; ");
            existing.push_str(&msg);
        }
        None => *slot = Some(msg),
    }
}

/// Monte-Carlo simulation over a noise grid.
pub fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let config = ConfigFile::load(args.shared.config.as_deref())?;
    let n_objects = resolve(args.n_objects, &config, "n-objects", 1000)?;
    let alpha = resolve(args.alpha, &config, "alpha", 0.1)?;
    let k_flag = resolve_opt(args.k, &config, "k")?;
    let n_iterations = resolve(args.n_iterations, &config, "n-iterations", 1000)?;
    let seed = resolve(args.shared.seed, &config, "seed", 0)?;
    let sigma_q = resolve(args.sigma_q, &config, "sigma-q", 1.0)?;
    let mean = resolve(args.mean, &config, "mean", 0.0)?;
    let scores_file: Option<PathBuf> = resolve_opt(args.scores_file, &config, "scores-file")?;
    let out = resolve(args.shared.out, &config, "out", PathBuf::from("."))?;
    let format = resolve(args.shared.format, &config, "format", OutputFormat::Csv)?;
    let threads = resolve_opt(args.shared.threads, &config, "threads")?;
    let keep_samples = resolve_opt(args.keep_samples, &config, "keep-samples")?;
    let redraw = args.redraw_per_sigma || resolve(None, &config, "redraw-per-sigma", false)?;

    let sigma_raw: Option<String> = resolve_opt(args.sigma, &config, "sigma")?;
    let sigma_grid = match sigma_raw {
        Some(raw) => {
            let mut grid = parse_sigma_list(&raw)?;
            grid.sort_by(f64::total_cmp);
            grid
        }
        None => {
            let lo = resolve_opt(args.sigma_min, &config, "sigma-min")?;
            let step = resolve_opt(args.delta_sigma_sq, &config, "delta-sigma-sq")?;
            let hi = resolve_opt(args.sigma_max, &config, "sigma-max")?;
            match (lo, step, hi) {
                (Some(lo), Some(step), Some(hi)) => {
                    montecarlo::sigma_grid_from_variance_steps(lo, step, hi)?
                }
                _ => {
                    return Err(Error::InvalidConfig(
                        "provide --sigma or the --sigma-min/--delta-sigma-sq/--sigma-max triple"
                            .into(),
                    ))
                }
            }
        }
    };

    let k = match k_flag {
        Some(k) => k,
        None => (alpha * n_objects as f64).round() as usize,
    };
    let score_source = match &scores_file {
        Some(path) => ScoreSource::Fixed(study::ingest_scores(path, ScoreFormat::Plain)?),
        None => ScoreSource::Distribution(ScoreDistribution::gaussian(mean, sigma_q)?),
    };
    let n_objects = match &score_source {
        ScoreSource::Fixed(scores) => scores.len(),
        ScoreSource::Distribution(_) => n_objects,
    };

    let sim_config = SimulationConfig {
        n_objects,
        k,
        sigma_grid,
        n_iterations,
        seed,
        score_source,
        redraw_scores_per_sigma: redraw,
        keep_samples,
    };
    sim_config.validate()?;

    eprintln!(
        "simulate: {} objects, k = {}, {} grid points x {} iterations, seed {}",
        sim_config.n_objects,
        sim_config.k,
        sim_config.sigma_grid.len(),
        sim_config.n_iterations,
        seed
    );
    let result = with_thread_cap(threads, || montecarlo::simulate(&sim_config))?;

    let parameters = serde_json::json!({
        "config": sim_config,
        "scores_file": scores_file.as_ref().map(|p| p.display().to_string()),
        "format": format,
    });

    let mut writer = RunWriter::new(out);
    match format {
        OutputFormat::Csv => {
            writer.stage("simulation.csv", result.to_csv().as_bytes())?;
            writer.finish("simulate", parameters, Some(seed))?;
        }
        OutputFormat::Json => {
            let manifest = writer.manifest("simulate", parameters, Some(seed));
            let doc = serde_json::json!({ "manifest": manifest, "results": result });
            writer.stage("simulation.json", &serde_json::to_vec_pretty(&doc).unwrap())?;
        }
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct PlanCurveRow {
    n_samples: u64,
    sigma: f64,
    f0: f64,
    sigma_f: f64,
    reliability: f64,
}

#[derive(serde::Serialize)]
struct PlanResults {
    design: StudyDesign,
    sigma_q: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    signal: Option<study::SignalEstimate>,
    n_star: u64,
    trace: Vec<study::PlanProbe>,
    curve: Vec<PlanCurveRow>,
}

/// Sample-size planning; emits a JSON study report plus a curve CSV.
pub fn cmd_plan(args: PlanArgs) -> Result<()> {
    let config = ConfigFile::load(args.shared.config.as_deref())?;
    let alpha = resolve(args.alpha, &config, "alpha", 0.01)?;
    let epsilon = resolve(args.epsilon, &config, "epsilon", 0.5)?;
    let delta = resolve(args.delta, &config, "delta", 0.1)?;
    let n_max = resolve(args.n_max, &config, "n-max", study::DEFAULT_N_MAX)?;
    let out = resolve(args.shared.out, &config, "out", PathBuf::from("."))?;
    let format = resolve(args.shared.format, &config, "format", OutputFormat::Csv)?;
    let threads = resolve_opt(args.shared.threads, &config, "threads")?;
    let scores_file: Option<PathBuf> = resolve_opt(args.scores_file, &config, "scores-file")?;
    let score_format = resolve(args.score_format, &config, "score-format", ScoreFormat::Plain)?;
    let sigma_q_flag = resolve_opt(args.sigma_q, &config, "sigma-q")?;
    let n_samples = resolve_opt(args.n_samples, &config, "n-samples")?;
    let n_objects_flag = resolve_opt(args.n_objects, &config, "n-objects")?;

    let (sigma_q, signal, n_objects, observed_n) = match (&scores_file, sigma_q_flag) {
        (Some(path), None) => {
            let n_samples = n_samples.ok_or_else(|| {
                Error::InvalidConfig("--n-samples is required with --scores-file".into())
            })?;
            let scores = study::ingest_scores(path, score_format)?;
            let n_objects = n_objects_flag.unwrap_or(scores.len());
            let signal = study::estimate_signal(&scores, n_samples)?;
            (signal.sigma2_q.sqrt(), Some(signal), n_objects, n_samples)
        }
        (None, Some(sq)) => {
            let n_objects = n_objects_flag.ok_or_else(|| {
                Error::InvalidConfig("--n-objects is required with an explicit --sigma-q".into())
            })?;
            (sq, None, n_objects, n_samples.unwrap_or(4))
        }
        (Some(_), Some(_)) => {
            return Err(Error::InvalidConfig(
                "provide either --sigma-q or --scores-file, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::InvalidConfig(
                "provide --sigma-q or --scores-file".into(),
            ))
        }
    };
    let mut design = StudyDesign::new(n_objects, alpha, epsilon, delta, observed_n.max(4))?;

    let (plan, curve_rows) = with_thread_cap(threads, || -> Result<_> {
        let plan = study::plan_sample_size(sigma_q, alpha, n_objects, epsilon, delta, n_max)?;
        // curve in a bracketing window around n*: n*/4 .. 4 n*, geometric
        let mut ns: Vec<u64> = (0..9)
            .map(|i| {
                let factor = 4.0f64.powf(i as f64 / 4.0 - 1.0);
                ((plan.n_star as f64 * factor).round() as u64).max(4)
            })
            .collect();
        ns.dedup();
        let curve = study::expected_overlap_curve(sigma_q, alpha, n_objects, &ns)?;
        for (n, err) in &curve.failures {
            eprintln!("plan: curve point n = {n}: {err}");
        }
        let q = ScoreDistribution::gaussian(0.0, sigma_q)?;
        let rows = curve
            .points
            .iter()
            .map(|p| {
                let m = tkl::overlap_moments(&q, p.sigma, alpha, n_objects)?;
                Ok(PlanCurveRow {
                    n_samples: p.n_samples,
                    sigma: p.sigma,
                    f0: p.f0,
                    sigma_f: p.sigma_f,
                    reliability: tkl::overlap_reliability_from_moments(&m, epsilon),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((plan, rows))
    })?;

    if signal.is_none() && n_samples.is_none() {
        // no observed sample count: report the planned one
        design.n_samples = plan.n_star;
    }

    let parameters = serde_json::json!({
        "sigma_q": sigma_q,
        "scores_file": scores_file.as_ref().map(|p| p.display().to_string()),
        "score_format": format!("{score_format:?}"),
        "alpha": alpha,
        "epsilon": epsilon,
        "delta": delta,
        "n_objects": n_objects,
        "n_max": n_max,
        "format": format,
    });

    let results = PlanResults {
        design,
        sigma_q,
        signal,
        n_star: plan.n_star,
        trace: plan.trace,
        curve: curve_rows,
    };

    let mut writer = RunWriter::new(out);
    if matches!(format, OutputFormat::Csv) {
        let mut csv = String::from("n,sigma,f0,sigma_f,reliability\n");
        for row in &results.curve {
            csv.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                row.n_samples, row.sigma, row.f0, row.sigma_f, row.reliability
            ));
        }
        writer.stage("curve.csv", csv.as_bytes())?;
    }
    let manifest = writer.manifest("plan", parameters.clone(), None);
    let doc = serde_json::json!({ "manifest": manifest, "results": results });
    writer.stage("report.json", &serde_json::to_vec_pretty(&doc).unwrap())?;
    if matches!(format, OutputFormat::Csv) {
        writer.finish("plan", parameters, None)?;
    }
    Ok(())
}

/// Exit-code contract: 0 success, 1 usage, 2 numerical, 3 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::ScoreParse { .. } => 3,
        Error::QuadratureNonConvergence { .. }
        | Error::SaddleNonConvergence { .. }
        | Error::SingularJacobian { .. }
        | Error::NearSingularHessian { .. }
        | Error::TargetUnreachable { .. }
        | Error::NoiseDominated { .. }
        | Error::RowFailures { .. }
        | Error::InfeasibleOverlap { .. } => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Plan(args) => cmd_plan(args),
    }
}
