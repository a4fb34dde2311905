//! The full distribution of the top-K overlap at one noise level: density
//! over [0, 1], a histogram from the simulator next to it, and reliability
//! Pr(f >= 1 - eps) for a few targets.
//!
//! ```bash
//! cargo run --example overlap_distribution
//! ```

use rankstab::dist::ScoreDistribution;
use rankstab::montecarlo::{simulate, ScoreSource, SimulationConfig};
use rankstab::tkl::{overlap_moments, overlap_pdf_from_moments, overlap_reliability_from_moments};

fn main() -> rankstab::Result<()> {
    let q = ScoreDistribution::gaussian(0.0, 1.0)?;
    let (sigma, alpha, n_objects) = (1.0, 0.1, 5000);

    let m = overlap_moments(&q, sigma, alpha, n_objects)?;
    println!(
        "sigma = {sigma}, alpha = {alpha}, N = {n_objects}: f0 = {:.5}, sigma_f = {:.5}\n",
        m.f0,
        m.sigma_f()
    );

    // histogram from the simulator for comparison
    let config = SimulationConfig {
        n_objects,
        k: (alpha * n_objects as f64).round() as usize,
        sigma_grid: vec![sigma],
        n_iterations: 400,
        seed: 7,
        score_source: ScoreSource::Distribution(q.clone()),
        redraw_scores_per_sigma: false,
        keep_samples: Some(true),
    };
    let sim = simulate(&config)?;
    let samples = sim.per_sigma[0].samples.as_ref().unwrap();

    let lo = m.f0 - 4.0 * m.sigma_f();
    let hi = m.f0 + 4.0 * m.sigma_f();
    let bins = 15;
    println!("{:>8} {:>12} {:>12}", "f", "density", "simulated");
    for b in 0..bins {
        let left = lo + (hi - lo) * b as f64 / bins as f64;
        let right = lo + (hi - lo) * (b + 1) as f64 / bins as f64;
        let center = 0.5 * (left + right);
        let hits = samples.iter().filter(|(_, f)| *f >= left && *f < right).count();
        let empirical = hits as f64 / samples.len() as f64 / (right - left);
        println!(
            "{center:>8.4} {:>12.3} {empirical:>12.3}",
            overlap_pdf_from_moments(&m, center)
        );
    }

    println!();
    println!("{:>6} {:>16}", "eps", "Pr(f >= 1-eps)");
    for eps in [0.4, 0.5, 0.55, 0.6, 0.7] {
        println!("{eps:>6.2} {:>16.5}", overlap_reliability_from_moments(&m, eps));
    }
    Ok(())
}
