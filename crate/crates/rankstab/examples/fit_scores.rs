//! Score ingestion and signal estimation: write a synthetic correlation
//! file, read it back with the Fisher transform, and split the observed
//! variance into signal and measurement noise.
//!
//! ```bash
//! cargo run --example fit_scores
//! ```

use rankstab::rng::CounterStream;
use rankstab::study::{estimate_signal, ingest_scores, ScoreFormat};
use std::io::Write;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // synthetic ground truth: 4000 features, true Fisher spread 0.2,
    // measured with n = 103 samples (noise sd exactly 0.1)
    let (sigma_q_true, n_samples) = (0.2, 103u64);
    let noise_sd = (1.0 / (n_samples as f64 - 3.0)).sqrt();
    let mut rng = CounterStream::new(0xF17, 0, 0);

    let dir = std::env::temp_dir().join("rankstab_fit_scores");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("correlations.csv");
    let mut file = std::fs::File::create(&path)?;
    writeln!(file, "# feature,correlation (synthetic, sigma_q = {sigma_q_true})")?;
    for i in 0..4000 {
        // center well above zero so the absolute value in the Fisher
        // transform never folds a score
        let true_score = 0.8 + sigma_q_true * rng.standard_normal();
        let observed = true_score + noise_sd * rng.standard_normal();
        // map the observed Fisher score back to a correlation for the file
        writeln!(file, "feat{i},{}", observed.tanh())?;
    }
    drop(file);

    let scores = ingest_scores(&path, ScoreFormat::Correlations)?;
    println!("ingested {} Fisher scores from {}", scores.len(), path.display());

    let estimate = estimate_signal(&scores, n_samples)?;
    println!("observed variance V_o  = {:.6}", estimate.v_o);
    println!("noise variance 1/(n-3) = {:.6}", estimate.sigma2_noise);
    println!(
        "signal sd sqrt(V_o - 1/(n-3)) = {:.4}  (generated with {sigma_q_true})",
        estimate.sigma2_q.sqrt()
    );
    Ok(())
}
