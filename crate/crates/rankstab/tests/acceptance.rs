//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measurements. Run with `--nocapture` to see them:
//!
//! ```text
//! cargo test --test acceptance -- --nocapture
//! ```
//!
//! Monte-Carlo comparisons against analytical moments need the
//! *unconditional* ensemble (over true-score draws and noise), while a single
//! simulation run conditions on one true-score draw. Where a criterion
//! compares against unconditional analytics, the oracle is therefore run
//! several times with fresh seeds (each run redraws the true scores) and the
//! samples are pooled; confidence intervals for pooled means use the
//! between-run spread, which is robust to the within-run dependence.

use rankstab::dist::ScoreDistribution;
use rankstab::montecarlo::{simulate, ScoreSource, SimulationConfig};
use rankstab::{kendall, study, tkl};
use std::time::Instant;

fn gauss(sigma_q: f64) -> ScoreDistribution {
    ScoreDistribution::gaussian(0.0, sigma_q).unwrap()
}

/// Pooled tau and overlap samples from `runs` oracle runs with fresh
/// true-score draws, `iters` noisy re-rankings each.
fn pooled_samples(
    sigma: f64,
    n_objects: usize,
    k: usize,
    runs: u64,
    iters: usize,
    seed_base: u64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut taus = Vec::new();
    let mut fs = Vec::new();
    for run in 0..runs {
        let config = SimulationConfig {
            n_objects,
            k,
            sigma_grid: vec![sigma],
            n_iterations: iters,
            seed: seed_base + run,
            score_source: ScoreSource::Distribution(gauss(1.0)),
            redraw_scores_per_sigma: false,
            keep_samples: Some(true),
        };
        let result = simulate(&config).unwrap();
        let samples = result.per_sigma[0].samples.as_ref().unwrap();
        taus.push(samples.iter().map(|p| p.0).collect());
        fs.push(samples.iter().map(|p| p.1).collect());
    }
    (taus, fs)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// (pooled mean, standard error of the pooled mean from between-run spread,
/// pooled sample variance)
fn pooled_stats(runs: &[Vec<f64>]) -> (f64, f64, f64) {
    let run_means: Vec<f64> = runs.iter().map(|r| mean(r)).collect();
    let grand = mean(&run_means);
    let se = (sample_var(&run_means) / run_means.len() as f64).sqrt();
    let all: Vec<f64> = runs.iter().flatten().copied().collect();
    (grand, se, sample_var(&all))
}

#[test]
fn criterion_1_mean_tau_quadrature_matches_closed_form() {
    let started = Instant::now();
    let q = gauss(1.0);
    let mut worst: f64 = 0.0;
    for snr in [0.1, 0.5, 1.0, 2.0, 10.0] {
        let sigma = 1.0 / snr;
        let quadrature = kendall::mean_tau(&q, sigma).unwrap();
        let closed = kendall::mean_tau_gaussian(1.0, sigma);
        let diff = (quadrature - closed).abs();
        worst = worst.max(diff);
        assert!(
            diff <= 1e-6,
            "snr {snr}: quadrature {quadrature} vs closed form {closed}"
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.1} s, budget 10 s");
    println!(
        "[criterion 1] PASS - 2-D quadrature matches the arctan closed form, \
         worst |diff| = {worst:.2e} over 5 noise ratios ({elapsed:.2} s)"
    );
}

#[test]
fn criterion_2_tau_moments_match_simulation() {
    let started = Instant::now();
    let q = gauss(1.0);
    let n_objects = 1000;
    let mut lines = Vec::new();
    for (idx, snr) in [0.5f64, 1.0, 2.0].into_iter().enumerate() {
        let sigma = 1.0 / snr;
        let m = kendall::tau_moments(&q, sigma, n_objects).unwrap();

        // 2000 oracle iterations split over 40 fresh-score runs
        let (taus, _) = pooled_samples(sigma, n_objects, 100, 40, 50, 7_000 + 1_000 * idx as u64);
        let (grand, se, pooled_var) = pooled_stats(&taus);

        let z99 = 2.5758;
        let z = (m.mu_tau - grand) / se;
        assert!(
            z.abs() <= z99,
            "snr {snr}: mu_tau {} outside 99% CI of simulated mean {grand} (se {se}, z {z:.2})",
            m.mu_tau
        );
        let rel = (m.sigma2_tau - pooled_var).abs() / pooled_var;
        assert!(
            rel <= 0.20,
            "snr {snr}: variance {} vs simulated {pooled_var} ({:.1}% off)",
            m.sigma2_tau,
            rel * 100.0
        );
        lines.push(format!("snr {snr}: z = {z:+.2}, var off {:.1}%", rel * 100.0));
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "took {elapsed:.1} s, budget 300 s");
    println!(
        "[criterion 2] PASS - analytical tau moments inside simulation bands \
         ({}) ({elapsed:.2} s)",
        lines.join("; ")
    );
}

#[test]
fn criterion_3_overlap_moments_match_simulation() {
    let started = Instant::now();
    let q = gauss(1.0);
    let (n_objects, alpha) = (5000, 0.1);
    let k = 500;
    let mut lines = Vec::new();
    for (idx, snr) in [0.5f64, 1.0, 2.0].into_iter().enumerate() {
        let sigma = 1.0 / snr;
        let m = tkl::overlap_moments(&q, sigma, alpha, n_objects).unwrap();

        let config = SimulationConfig {
            n_objects,
            k,
            sigma_grid: vec![sigma],
            n_iterations: 500,
            seed: 90_000 + idx as u64,
            score_source: ScoreSource::Distribution(gauss(1.0)),
            redraw_scores_per_sigma: false,
            keep_samples: Some(false),
        };
        let sim = simulate(&config).unwrap();
        let stats = &sim.per_sigma[0];

        let mode_diff = (m.f0 - stats.mean_f).abs();
        assert!(
            mode_diff <= 0.02,
            "snr {snr}: f0 {} vs simulated mean {} (diff {mode_diff})",
            m.f0,
            stats.mean_f
        );
        let sim_sd = stats.var_f.sqrt();
        let sd_rel = (m.sigma_f() - sim_sd).abs() / sim_sd;
        assert!(
            sd_rel <= 0.30,
            "snr {snr}: sigma_f {} vs simulated sd {sim_sd} ({:.1}% off)",
            m.sigma_f(),
            sd_rel * 100.0
        );
        lines.push(format!(
            "snr {snr}: |f0 - mean| = {mode_diff:.4}, sd off {:.1}%",
            sd_rel * 100.0
        ));
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "took {elapsed:.1} s, budget 600 s");
    println!(
        "[criterion 3] PASS - saddle-point overlap moments track simulation \
         ({}) ({elapsed:.2} s)",
        lines.join("; ")
    );
}

#[test]
fn criterion_4_limit_behavior() {
    let started = Instant::now();
    let q = gauss(1.0);
    let alpha = 0.1;

    // drowning noise: sigma / sigma_q = 100
    let mu_noisy = kendall::mean_tau(&q, 100.0).unwrap();
    assert!(
        (0.5..=0.51).contains(&mu_noisy),
        "mu_tau at snr 0.01 = {mu_noisy}"
    );
    let f0_noisy = tkl::mode_overlap(&q, 100.0, alpha).unwrap();
    assert!(
        (alpha..=alpha + 0.01).contains(&f0_noisy),
        "f0 at snr 0.01 = {f0_noisy}"
    );

    // near-noiseless: sigma / sigma_q = 0.01
    let mu_clean = kendall::mean_tau(&q, 0.01).unwrap();
    assert!(mu_clean >= 0.99, "mu_tau at snr 100 = {mu_clean}");
    let f0_clean = tkl::mode_overlap(&q, 0.01, alpha).unwrap();
    assert!(f0_clean >= 0.99, "f0 at snr 100 = {f0_clean}");

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "took {elapsed:.1} s, budget 60 s");
    println!(
        "[criterion 4] PASS - noise-floor and noiseless limits hold \
         (mu: {mu_noisy:.4}/{mu_clean:.4}, f0: {f0_noisy:.4}/{f0_clean:.4}) ({elapsed:.2} s)"
    );
}

#[test]
fn criterion_5_overlap_lags_tau_most_at_intermediate_noise() {
    let started = Instant::now();
    let q = gauss(1.0);
    let alpha = 0.1;
    let snrs = [0.25, 0.5, 1.0, 2.0, 4.0];

    // raw values: the overlap must sit below tau everywhere. For the "where
    // is the gap largest" question the two measures are first rescaled by
    // their random-ranking baselines (tau floors at 1/2, the overlap at
    // alpha), since their raw values are not on a comparable scale.
    let mut gaps = Vec::new();
    for &snr in &snrs {
        let sigma = 1.0 / snr;
        let mu = kendall::mean_tau(&q, sigma).unwrap();
        let f0 = tkl::mode_overlap(&q, sigma, alpha).unwrap();
        assert!(f0 < mu, "snr {snr}: f0 {f0} not below mu_tau {mu}");
        let tau_rescaled = (mu - 0.5) / 0.5;
        let f_rescaled = (f0 - alpha) / (1.0 - alpha);
        gaps.push(tau_rescaled - f_rescaled);
    }
    let argmax = gaps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert!(
        argmax > 0 && argmax < snrs.len() - 1,
        "maximum gap at grid edge (index {argmax}): {gaps:?}"
    );

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "took {elapsed:.1} s, budget 120 s");
    println!(
        "[criterion 5] PASS - overlap trails tau at every noise level, \
         baseline-rescaled gap peaks at snr {} (gaps {:?}) ({elapsed:.2} s)",
        snrs[argmax],
        gaps.iter().map(|g| (g * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
}

#[test]
fn criterion_6_study_pipeline_round_trip() {
    let started = Instant::now();

    // synthetic scores: 10000 genes, true spread 0.2, measured with n = 103
    // samples (noise sd exactly 0.1)
    let sigma_q_true = 0.2;
    let n_samples = 103;
    let noise_sd = study::noise_variance(n_samples).unwrap().sqrt();
    let mut rng = rankstab::rng::CounterStream::new(0x5EED, 0, 0);
    let observed: Vec<f64> = (0..10_000)
        .map(|_| 0.5 + sigma_q_true * rng.standard_normal() + noise_sd * rng.standard_normal())
        .collect();

    let estimate = study::estimate_signal(&observed, n_samples).unwrap();
    let sigma_q_hat = estimate.sigma2_q.sqrt();
    assert!(
        (sigma_q_hat - sigma_q_true).abs() <= 0.01,
        "recovered sigma_q {sigma_q_hat}"
    );

    let n_grid = [5u64, 13, 53, 203, 1003, 10_003, 100_003];
    let curve = study::expected_overlap_curve(sigma_q_hat, 0.01, 10_000, &n_grid).unwrap();
    assert!(curve.failures.is_empty(), "{:?}", curve.failures);
    for pair in curve.points.windows(2) {
        assert!(pair[1].f0 >= pair[0].f0 - 1e-6, "curve not nondecreasing");
    }
    let tail = curve.points.last().unwrap().f0;
    assert!(tail > 0.97, "curve tail f0 = {tail}");

    let (eps, delta) = (0.5, 0.1);
    let plan =
        study::plan_sample_size(sigma_q_hat, 0.01, 10_000, eps, delta, study::DEFAULT_N_MAX)
            .unwrap();
    let q = gauss(sigma_q_hat);
    let criterion = |n: u64| {
        let sigma = study::noise_variance(n).unwrap().sqrt();
        let m = tkl::overlap_moments(&q, sigma, 0.01, 10_000).unwrap();
        tkl::overlap_reliability_from_moments(&m, eps) >= 1.0 - delta
    };
    assert!(criterion(plan.n_star), "criterion fails at n* = {}", plan.n_star);
    assert!(
        !criterion(plan.n_star - 1),
        "criterion already holds at n* - 1 = {}",
        plan.n_star - 1
    );

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "took {elapsed:.1} s, budget 300 s");
    println!(
        "[criterion 6] PASS - recovered sigma_q {sigma_q_hat:.4} (true {sigma_q_true}), \
         curve climbs to {tail:.3}, n* = {} with exact boundary ({elapsed:.2} s)",
        plan.n_star
    );
}

#[test]
fn criterion_7_planner_matches_curve_crossing_near_n_1000() {
    let started = Instant::now();

    // signal strength placing the half-overlap crossing near n = 1000 at
    // alpha = 0.01 (the snr where f0 = 0.5 is 1.8425; noise sd at n = 1000
    // is 1/sqrt(997))
    let sigma_q = 1.8425 / 997.0f64.sqrt();
    let (alpha, n_objects) = (0.01, 5000);
    let q = gauss(sigma_q);

    // independent crossing locator: bisection on f0(n) - 1/2
    let f0_at = |n: u64| {
        let sigma = study::noise_variance(n).unwrap().sqrt();
        tkl::mode_overlap(&q, sigma, alpha).unwrap()
    };
    let (mut lo, mut hi) = (4u64, 100_000u64);
    assert!(f0_at(lo) < 0.5 && f0_at(hi) > 0.5);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f0_at(mid) >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let crossing = hi;
    assert!(
        (600..=1600).contains(&crossing),
        "crossing at n = {crossing}, expected near 1000"
    );

    let plan =
        study::plan_sample_size(sigma_q, alpha, n_objects, 0.5, 0.5, study::DEFAULT_N_MAX).unwrap();
    let rel_gap = (plan.n_star as f64 - crossing as f64).abs() / crossing as f64;
    assert!(
        rel_gap <= 0.10,
        "n* = {} vs crossing {crossing} ({:.1}% apart)",
        plan.n_star,
        rel_gap * 100.0
    );

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "took {elapsed:.1} s, budget 300 s");
    println!(
        "[criterion 7] PASS - half-overlap crossing at n = {crossing}, planner n* = {} \
         ({:.1}% apart) ({elapsed:.2} s)",
        plan.n_star,
        rel_gap * 100.0
    );
}

#[test]
fn criterion_8_exact_measures_match_brute_force() {
    let started = Instant::now();

    fn tau_brute(pt: &[u32], po: &[u32]) -> f64 {
        let n = pt.len();
        let mut agree = 0u64;
        for i in 0..n {
            for j in (i + 1)..n {
                agree += ((pt[i] < pt[j]) == (po[i] < po[j])) as u64;
            }
        }
        agree as f64 / (n as u64 * (n as u64 - 1) / 2) as f64
    }

    fn overlap_brute(pt: &[u32], po: &[u32], k: usize) -> f64 {
        let in_both = pt
            .iter()
            .zip(po)
            .filter(|(t, o)| **t as usize <= k && **o as usize <= k)
            .count();
        in_both as f64 / k as f64
    }

    fn permutations(n: u32) -> Vec<Vec<u32>> {
        if n == 1 {
            return vec![vec![1]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..p.len() + 1 {
                let mut q = p.clone();
                q.insert(pos, n);
                out.push(q);
            }
        }
        out
    }

    // exhaustive up to N = 6
    let mut checked = 0u64;
    for n in 2..=6u32 {
        let perms = permutations(n);
        for p1 in &perms {
            for p2 in &perms {
                assert_eq!(kendall::exact_tau(p1, p2).unwrap(), tau_brute(p1, p2));
                for k in 1..=n as usize {
                    assert_eq!(
                        tkl::exact_overlap(p1, p2, k).unwrap(),
                        overlap_brute(p1, p2, k)
                    );
                }
                checked += 1;
            }
        }
    }

    // sampled at realistic sizes
    let mut rng = rankstab::rng::CounterStream::new(0xACCE, 0, 0);
    let mut shuffle = |n: usize| -> Vec<u32> {
        let mut p: Vec<u32> = (1..=n as u32).collect();
        for i in (1..n).rev() {
            p.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
        }
        p
    };
    for n in [100usize, 1000] {
        for _ in 0..5_000 {
            let p1 = shuffle(n);
            let p2 = shuffle(n);
            assert_eq!(kendall::exact_tau(&p1, &p2).unwrap(), tau_brute(&p1, &p2));
            let k = n / 10;
            assert_eq!(
                tkl::exact_overlap(&p1, &p2, k).unwrap(),
                overlap_brute(&p1, &p2, k)
            );
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "took {elapsed:.1} s, budget 60 s");
    println!(
        "[criterion 8] PASS - exact tau and overlap match brute force on \
         {checked} exhaustive pairs (N <= 6) and 10000 random pairs at N = 100 and 1000 \
         ({elapsed:.2} s)"
    );
}

#[test]
fn criterion_9_cli_simulation_is_byte_deterministic() {
    let started = Instant::now();
    let bin = env!("CARGO_BIN_EXE_rankstab");

    let run = |dir: &std::path::Path, threads: &str| {
        let status = std::process::Command::new(bin)
            .args([
                "simulate",
                "--n-objects",
                "400",
                "--k",
                "40",
                "--sigma",
                "0.5,1,2",
                "--n-iterations",
                "300",
                "--seed",
                "12345",
                "--threads",
                threads,
                "--out",
            ])
            .arg(dir)
            .stderr(std::process::Stdio::null())
            .status()
            .expect("spawn rankstab");
        assert!(status.success());
        std::fs::read(dir.join("simulation.csv")).unwrap()
    };

    let t1 = tempfile::tempdir().unwrap();
    let t2 = tempfile::tempdir().unwrap();
    let t3 = tempfile::tempdir().unwrap();
    let first = run(t1.path(), "8");
    let second = run(t2.path(), "8");
    let single_threaded = run(t3.path(), "1");

    assert_eq!(first, second, "same seed, same threads: CSV differs");
    assert_eq!(
        first, single_threaded,
        "thread count changed the CSV bytes"
    );

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "took {elapsed:.1} s, budget 120 s");
    println!(
        "[criterion 9] PASS - simulate CSV is byte-identical across repeat runs \
         and across --threads 1 vs 8 ({} bytes) ({elapsed:.2} s)",
        first.len()
    );
}
