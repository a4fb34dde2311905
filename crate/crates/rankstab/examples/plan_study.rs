//! Sample-size planning: how many samples does a ranked feature-selection
//! study need before its top list becomes reliable?
//!
//! ```bash
//! cargo run --example plan_study
//! ```

use rankstab::study::{expected_overlap_curve, plan_sample_size, DEFAULT_N_MAX};

fn main() -> rankstab::Result<()> {
    // signal strength of the true Fisher scores, top 1% list, 5000 features
    let (sigma_q, alpha, n_objects) = (0.06, 0.01, 5000);

    println!("sigma_q = {sigma_q}, alpha = {alpha}, N = {n_objects}\n");
    println!("expected overlap as the sample count grows:");
    let ns = [10u64, 30, 100, 300, 1000, 3000, 10_000];
    let curve = expected_overlap_curve(sigma_q, alpha, n_objects, &ns)?;
    println!("{:>8} {:>9} {:>9} {:>9}", "n", "sigma", "f0", "sigma_f");
    for p in &curve.points {
        println!(
            "{:>8} {:>9.4} {:>9.4} {:>9.4}",
            p.n_samples, p.sigma, p.f0, p.sigma_f
        );
    }
    for (n, err) in &curve.failures {
        eprintln!("n = {n}: {err}");
    }

    println!();
    for (eps, delta) in [(0.5, 0.1), (0.3, 0.1), (0.2, 0.05)] {
        let plan = plan_sample_size(sigma_q, alpha, n_objects, eps, delta, DEFAULT_N_MAX)?;
        println!(
            "overlap >= {:.1} with probability >= {:.2}: n* = {} ({} probes)",
            1.0 - eps,
            1.0 - delta,
            plan.n_star,
            plan.trace.len()
        );
    }
    Ok(())
}
