//! Analytical moments of the pair-agreement similarity (Kendall's tau on the
//! [0, 1] scale) between the true ranking and a noise-corrupted ranking, plus
//! the exact finite-N value used by the Monte-Carlo oracle.
//!
//! For scores r_i with additive N(0, sigma^2) noise, a pair's order survives
//! with probability Phi(|r_j - r_i| / (sqrt(2) sigma)). The mean of tau is a
//! 2-D integral of that kernel against q x q; the variance needs the
//! cross moment E(tau_12 tau_23), whose inner noise integrals collapse to
//! bivariate-normal orthant probabilities with correlation +-1/2 (the shared
//! middle object induces correlation -1/2 between the two noisy differences).

use crate::bvn;
use crate::dist::{normal_cdf, ScoreDistribution};
use crate::error::{Error, Result};
use crate::quad;
use rayon::prelude::*;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Mean, variance and the pair-pair cross moment of tau at one (q, sigma, N).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TauMoments {
    pub mu_tau: f64,
    pub sigma2_tau: f64,
    pub n_objects: usize,
    /// E(tau_12 tau_23), kept for diagnostics.
    pub e_tau12_tau23: f64,
}

pub(crate) fn validate_permutation(perm: &[u32]) -> Result<()> {
    let n = perm.len();
    if n < 2 {
        return Err(Error::TooFewObjects { needed: 2, got: n });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        let idx = p as usize;
        if idx == 0 || idx > n || seen[idx - 1] {
            return Err(Error::NotAPermutation(n));
        }
        seen[idx - 1] = true;
    }
    Ok(())
}

/// Count inversions of `seq` by merge sort.
fn count_inversions(seq: &mut [u32], buf: &mut [u32]) -> u64 {
    let n = seq.len();
    let mut inversions = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo + width < n {
            let mid = lo + width;
            let hi = (mid + width).min(n);
            let (mut i, mut j, mut out) = (lo, mid, lo);
            while i < mid || j < hi {
                if i < mid && (j >= hi || seq[i] <= seq[j]) {
                    buf[out] = seq[i];
                    i += 1;
                } else {
                    inversions += (mid - i) as u64;
                    buf[out] = seq[j];
                    j += 1;
                }
                out += 1;
            }
            seq[lo..hi].copy_from_slice(&buf[lo..hi]);
            lo = hi;
        }
        width *= 2;
    }
    inversions
}

/// Fraction of the C(N, 2) object pairs whose relative order agrees between
/// two rankings. Inversion counting, O(N log N); agrees bit-for-bit with the
/// quadratic pair scan because both divide the same integer counts.
pub fn exact_tau(perm_true: &[u32], perm_obs: &[u32]) -> Result<f64> {
    if perm_true.len() != perm_obs.len() {
        return Err(Error::LengthMismatch {
            left: perm_true.len(),
            right: perm_obs.len(),
        });
    }
    validate_permutation(perm_true)?;
    validate_permutation(perm_obs)?;
    let n = perm_true.len();

    // order objects by true rank, then count how many observed ranks invert
    let mut seq = vec![0u32; n];
    for (obj, &rank) in perm_true.iter().enumerate() {
        seq[rank as usize - 1] = perm_obs[obj];
    }
    let mut buf = vec![0u32; n];
    let inversions = count_inversions(&mut seq, &mut buf);
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    Ok((pairs - inversions) as f64 / pairs as f64)
}

/// Probability the noisy order of one pair matches its true order:
/// Phi(|r_j - r_i| / (sqrt(2) sigma)).
pub fn pair_agreement_prob(r_i: f64, r_j: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let gap = r_j - r_i;
    // rejects NaN scores and same-signed infinite pairs, where the gap is
    // undefined; a single infinite score is a valid separation limit
    if gap.is_nan() {
        return Err(Error::NonFiniteInput(gap));
    }
    Ok(normal_cdf(gap.abs() / (SQRT_2 * sigma)))
}

/// Mean pair agreement under q and noise sigma, by 2-D adaptive quadrature
/// over the ordered half-plane (the integrand is symmetric in (r1, r2)).
pub fn mean_tau(q: &ScoreDistribution, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let pdf = q.density_fn()?;
    let (a, b) = q.support();
    let scale = SQRT_2 * sigma;
    let outer = quad::integrate(
        |r1| {
            let inner = quad::integrate(
                |r2| pdf(r2) * normal_cdf((r2 - r1) / scale),
                r1,
                b,
                1e-9,
                1e-13,
            )
            .unwrap_or(f64::NAN);
            pdf(r1) * inner
        },
        a,
        b,
        1e-8,
        1e-12,
    )?;
    if !outer.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            estimate: outer,
            error: f64::NAN,
        });
    }
    Ok(2.0 * outer)
}

/// Closed-form mean pair agreement for Gaussian scores:
/// 1/2 + arctan(sigma_q / sigma) / pi.
pub fn mean_tau_gaussian(sigma_q: f64, sigma: f64) -> f64 {
    0.5 + (sigma_q / sigma).atan() / std::f64::consts::PI
}

/// E(tau_12 tau_23): expected product of the agreement indicators of two
/// pairs sharing an object.
///
/// The outer 3-D integral runs over sorted scores x < y < z; the six
/// orderings of (r1, r2, r3) collapse into three smooth region terms (object
/// 2 in the middle, lowest, or highest). Gap axes use a sinh substitution so
/// the noise-scale transition is resolved uniformly in sigma; the order of
/// the tensor Gauss-Legendre rule escalates until two refinements agree to
/// 1e-6 relative.
pub fn cross_moment_tau(q: &ScoreDistribution, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let pdf = q.density_fn()?;
    let (a, b) = q.support();
    let scale = SQRT_2 * sigma;

    let mut prev: Option<f64> = None;
    for order in [12usize, 16, 24, 32, 48, 64] {
        let value = cross_moment_at_order(&pdf, a, b, scale, order);
        if let Some(p) = prev {
            if (value - p).abs() <= 1e-6 * value.abs().max(1e-3) {
                return Ok(value);
            }
        }
        prev = Some(value);
    }
    Err(Error::QuadratureNonConvergence {
        estimate: prev.unwrap(),
        error: f64::NAN,
    })
}

fn cross_moment_at_order<F: Fn(f64) -> f64 + Sync>(
    pdf: &F,
    a: f64,
    b: f64,
    scale: f64,
    order: usize,
) -> f64 {
    let (nodes, weights) = quad::gauss_legendre(order);

    // per-x slice sums computed in parallel, reduced in index order
    let slices: Vec<f64> = (0..order)
        .into_par_iter()
        .map(|i| {
            let (x, jx) = quad::scale_node(nodes[i], a, b);
            let wx = weights[i] * jx * pdf(x);
            if wx == 0.0 {
                return 0.0;
            }
            // g1 = y - x on a sinh grid: g = scale * sinh(t)
            let t1_max = libm::asinh((b - x) / scale);
            let mut sum_x = 0.0;
            for j in 0..order {
                let (t1, jt1) = quad::scale_node(nodes[j], 0.0, t1_max);
                let s1 = libm::sinh(t1);
                let g1 = scale * s1;
                let y = x + g1;
                let w1 = weights[j] * jt1 * scale * libm::cosh(t1) * pdf(y);
                if w1 == 0.0 {
                    continue;
                }
                let t2_max = libm::asinh((b - y) / scale);
                let mut sum_y = 0.0;
                for (tk, wk) in nodes.iter().zip(&weights) {
                    let (t2, jt2) = quad::scale_node(*tk, 0.0, t2_max);
                    let s2 = libm::sinh(t2);
                    let z = y + scale * s2;
                    let w2 = wk * jt2 * scale * libm::cosh(t2) * pdf(z);
                    if w2 == 0.0 {
                        continue;
                    }
                    let s3 = s1 + s2;
                    // object 2 in the middle / lowest / highest, two
                    // orderings each by the 1 <-> 3 relabeling symmetry
                    let v = 2.0 * bvn::upper_orthant(-s1, -s2, -0.5)
                        + 2.0 * bvn::upper_orthant(-s1, -s3, 0.5)
                        + 2.0 * bvn::upper_orthant(-s2, -s3, 0.5);
                    sum_y += w2 * v;
                }
                sum_x += w1 * sum_y;
            }
            wx * sum_x
        })
        .collect();
    slices.iter().sum()
}

/// Variance of tau at N objects, assembled from the mean and the shared-pair
/// cross moment; pairs with four distinct objects are independent and drop
/// out against mu^2.
pub fn var_tau(q: &ScoreDistribution, sigma: f64, n_objects: usize) -> Result<f64> {
    if n_objects < 3 {
        return Err(Error::TooFewObjects {
            needed: 3,
            got: n_objects,
        });
    }
    let moments = tau_moments(q, sigma, n_objects)?;
    Ok(moments.sigma2_tau)
}

/// Mean, variance and cross moment in one pass.
pub fn tau_moments(q: &ScoreDistribution, sigma: f64, n_objects: usize) -> Result<TauMoments> {
    if n_objects < 3 {
        return Err(Error::TooFewObjects {
            needed: 3,
            got: n_objects,
        });
    }
    let mu = mean_tau(q, sigma)?;
    let cross = cross_moment_tau(q, sigma)?;
    let n = n_objects as f64;
    let pairs = n * (n - 1.0) / 2.0;
    let sigma2 = (mu + (3.0 - 2.0 * n) * mu * mu + 2.0 * (n - 2.0) * cross) / pairs;
    Ok(TauMoments {
        mu_tau: mu,
        sigma2_tau: sigma2.max(0.0),
        n_objects,
        e_tau12_tau23: cross,
    })
}

/// Pr(tau >= 1 - epsilon) under the Gaussian approximation
/// tau ~ N(mu_tau, sigma2_tau), clamped to [0, 1].
///
/// The normality of the pair-agreement sum is an approximation (the
/// summands are weakly dependent indicators, but no limit theorem is
/// invoked); its accuracy at small N is unquantified and is probed
/// empirically by the simulation cross-checks.
pub fn tau_reliability(
    q: &ScoreDistribution,
    sigma: f64,
    n_objects: usize,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidFraction(epsilon));
    }
    if epsilon >= 1.0 {
        return Ok(1.0); // tau is nonnegative, so tau >= 0 always holds
    }
    let m = tau_moments(q, sigma, n_objects)?;
    let threshold = 1.0 - epsilon;
    let sd = m.sigma2_tau.sqrt();
    if sd == 0.0 {
        return Ok(if m.mu_tau >= threshold { 1.0 } else { 0.0 });
    }
    Ok(normal_cdf((m.mu_tau - threshold) / sd).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterStream;
    use approx::assert_abs_diff_eq;

    /// O(N^2) reference scan.
    fn tau_brute(pt: &[u32], po: &[u32]) -> f64 {
        let n = pt.len();
        let mut agree = 0u64;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = (pt[i] < pt[j]) == (po[i] < po[j]);
                agree += a as u64;
            }
        }
        agree as f64 / (n * (n - 1) / 2) as f64
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

    #[test]
    fn exact_tau_examples() {
        let id: Vec<u32> = (1..=6).collect();
        let rev: Vec<u32> = (1..=6).rev().collect();
        assert_eq!(exact_tau(&id, &id).unwrap(), 1.0);
        assert_eq!(exact_tau(&id, &rev).unwrap(), 0.0);
        // (1,2,3) vs (1,3,2): pairs {1,2} and {1,3} agree, {2,3} flips
        assert_abs_diff_eq!(
            exact_tau(&[1, 2, 3], &[1, 3, 2]).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn exact_tau_rejects_bad_input() {
        assert!(matches!(
            exact_tau(&[1, 2], &[1, 2, 3]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            exact_tau(&[1, 1, 3], &[1, 2, 3]),
            Err(Error::NotAPermutation(3))
        ));
        assert!(matches!(
            exact_tau(&[0, 1, 2], &[1, 2, 3]),
            Err(Error::NotAPermutation(3))
        ));
        assert!(exact_tau(&[1], &[1]).is_err());
    }

    #[test]
    fn exact_tau_matches_brute_force_exhaustively() {
        for n in 2..=5u32 {
            let perms = permutations(n);
            for p1 in &perms {
                for p2 in &perms {
                    let fast = exact_tau(p1, p2).unwrap();
                    assert_eq!(fast, tau_brute(p1, p2), "{p1:?} vs {p2:?}");
                    assert_eq!(fast, exact_tau(p2, p1).unwrap());
                }
            }
        }
    }

    #[test]
    fn exact_tau_matches_brute_force_sampled() {
        let mut rng = CounterStream::new(11, 0, 0);
        for n in [7usize, 8, 40] {
            for _ in 0..50 {
                let mut p1: Vec<u32> = (1..=n as u32).collect();
                let mut p2: Vec<u32> = (1..=n as u32).collect();
                for i in (1..n).rev() {
                    p1.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
                    p2.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
                }
                assert_eq!(exact_tau(&p1, &p2).unwrap(), tau_brute(&p1, &p2));
            }
        }
    }

    #[test]
    fn pair_agreement_examples() {
        assert_eq!(pair_agreement_prob(1.3, 1.3, 2.0).unwrap(), 0.5);
        assert_abs_diff_eq!(
            pair_agreement_prob(0.0, 1e12, 1.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        // Phi(1): oracle value from the normal-cdf tests
        assert_abs_diff_eq!(
            pair_agreement_prob(0.0, SQRT_2, 1.0).unwrap(),
            0.841345,
            epsilon = 1e-6
        );
        assert!(pair_agreement_prob(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn mean_tau_matches_closed_form() {
        let q = ScoreDistribution::gaussian(0.0, 1.0).unwrap();
        for snr in [0.5, 1.0, 2.0] {
            let v = mean_tau(&q, 1.0 / snr).unwrap();
            assert_abs_diff_eq!(v, mean_tau_gaussian(1.0, 1.0 / snr), epsilon = 1e-6);
        }
        assert_abs_diff_eq!(mean_tau(&q, 1.0).unwrap(), 0.75, epsilon = 1e-6);
        assert_abs_diff_eq!(mean_tau_gaussian(2.0, 1.0), 0.852416, epsilon = 1e-6);
        // pure-noise limit
        assert_abs_diff_eq!(mean_tau(&q, 1e4).unwrap(), 0.5, epsilon = 1e-4);
    }

    #[test]
    fn mean_tau_monotone_and_shift_scale_invariant() {
        let q = ScoreDistribution::gaussian(0.0, 1.0).unwrap();
        let hi = mean_tau(&q, 0.5).unwrap();
        let lo = mean_tau(&q, 2.0).unwrap();
        assert!(hi > lo);
        assert!((0.5..=1.0).contains(&lo) && (0.5..=1.0).contains(&hi));

        let scaled = ScoreDistribution::gaussian(7.0, 3.0).unwrap();
        assert_abs_diff_eq!(
            mean_tau(&scaled, 3.0).unwrap(),
            mean_tau(&q, 1.0).unwrap(),
            epsilon = 1e-7
        );
    }

    // Cross-implementation oracle values from an independent quadrature of
    // the same integral (different node layout, different bvn evaluator),
    // computed before this module was written.
    #[test]
    fn cross_moment_frozen_values() {
        let q = ScoreDistribution::gaussian(0.0, 1.0).unwrap();
        for (sigma, expected) in [(2.0, 0.44198950), (1.0, 0.57704663), (0.5, 0.73261054)] {
            let v = cross_moment_tau(&q, sigma).unwrap();
            assert_abs_diff_eq!(v, expected, epsilon = 5e-6);
        }
    }

    #[test]
    fn cross_moment_limits() {
        let q = ScoreDistribution::gaussian(0.0, 1.0).unwrap();
        // sigma -> inf: a uniformly random observed ranking keeps both pairs
        // with probability 5/18 (1/6 when object 2 is the true middle, 1/3
        // otherwise), not the naive independence value 1/4; the finite-sigma
        // correction decays like sigma_q/sigma
        let v = cross_moment_tau(&q, 1e4).unwrap();
        assert_abs_diff_eq!(v, 5.0 / 18.0, epsilon = 1e-4);
        // sigma -> 0: both indicators become certain; the Frechet floor
        // 2 mu - 1 already forces the climb to 1 as mu -> 1
        let v0 = cross_moment_tau(&q, 0.2).unwrap();
        let mu0 = mean_tau_gaussian(1.0, 0.2);
        assert!(v0 > cross_moment_tau(&q, 1.0).unwrap());
        assert!(v0 >= 2.0 * mu0 - 1.0 - 1e-6 && v0 < 1.0, "v0 = {v0}");
    }

    #[test]
    fn cross_moment_within_frechet_bounds() {
        let q = ScoreDistribution::gaussian(0.0, 1.0).unwrap();
        for sigma in [0.4, 1.0, 3.0] {
            let mu = mean_tau(&q, sigma).unwrap();
            let e = cross_moment_tau(&q, sigma).unwrap();
            assert!(e <= mu + 1e-9, "sigma={sigma}: e={e} mu={mu}");
            assert!(e >= (2.0 * mu - 1.0).max(0.0) - 1e-9, "sigma={sigma}");
        }
    }

    #[test]
    fn cross_moment_matches_monte_carlo_triples() {
        // direct simulation of two shared-object pair indicators; the region
        // decomposition and prefactors must agree with it
        let q = ScoreDistribution::gaussian(0.0, 1.0).unwrap();
        let sigma = 1.0;
        let mut rng = CounterStream::new(0xC0FFEE, 0, 0);
        let iters = 200_000;
        let mut hits = 0u64;
        for _ in 0..iters {
            let r: [f64; 3] = [rng.standard_normal(), rng.standard_normal(), rng.standard_normal()];
            let s: [f64; 3] = [
                r[0] + sigma * rng.standard_normal(),
                r[1] + sigma * rng.standard_normal(),
                r[2] + sigma * rng.standard_normal(),
            ];
            let t12 = (s[1] - s[0]).signum() == (r[1] - r[0]).signum();
            let t23 = (s[2] - s[1]).signum() == (r[2] - r[1]).signum();
            hits += (t12 && t23) as u64;
        }
        let mc = hits as f64 / iters as f64;
        let se = (mc * (1.0 - mc) / iters as f64).sqrt();
        let v = cross_moment_tau(&q, sigma).unwrap();
        assert!(
            (v - mc).abs() <= 4.0 * se,
            "quadrature {v} vs MC {mc} +- {se}"
        );
    }

    #[test]
    fn var_tau_frozen_and_structure() {
        let q = ScoreDistribution::gaussian(0.0, 1.0).unwrap();
        // independent-quadrature oracle value at snr = 1, N = 1000
        let v = var_tau(&q, 1.0, 1000).unwrap();
        assert_abs_diff_eq!(v, 5.850366e-5, epsilon = 3e-8);
        // doubling N strictly decreases the variance
        assert!(var_tau(&q, 1.0, 2000).unwrap() < v);
        // nearly noiseless: variance collapses
        assert!(var_tau(&q, 0.2, 1000).unwrap() < v);
        assert!(matches!(
            var_tau(&q, 1.0, 2),
            Err(Error::TooFewObjects { .. })
        ));
    }

    #[test]
    fn tau_reliability_limits() {
        let q = ScoreDistribution::gaussian(0.0, 1.0).unwrap();
        assert_eq!(tau_reliability(&q, 1.0, 100, 1.0).unwrap(), 1.0);
        // near-noiseless: tau concentrates at 1
        let r = tau_reliability(&q, 0.2, 1000, 0.1).unwrap();
        assert!(r > 0.999, "r = {r}");
        // mu_tau = 0.75 at snr 1; asking for tau >= 0.75 gives ~1/2
        let mid = tau_reliability(&q, 1.0, 1000, 0.25).unwrap();
        assert_abs_diff_eq!(mid, 0.5, epsilon = 0.01);
        assert!(tau_reliability(&q, 1.0, 100, 0.0).is_err());
    }
}
