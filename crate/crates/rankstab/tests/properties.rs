//! Property tests for the structural invariants of the probability kernels
//! and the exact similarity measures.

use proptest::prelude::*;
use rankstab::dist::{miss_prob, normal_cdf, ScoreDistribution};
use rankstab::montecarlo::rank_scores;
use rankstab::study::fisher_score;
use rankstab::{bvn, kendall, tkl};

fn permutation_strategy(max_n: usize) -> impl Strategy<Value = Vec<u32>> {
    (2..=max_n).prop_flat_map(|n| {
        Just((1..=n as u32).collect::<Vec<u32>>()).prop_shuffle()
    })
}

fn two_permutations(max_n: usize) -> impl Strategy<Value = (Vec<u32>, Vec<u32>)> {
    (2..=max_n).prop_flat_map(|n| {
        let base: Vec<u32> = (1..=n as u32).collect();
        (Just(base.clone()).prop_shuffle(), Just(base).prop_shuffle())
    })
}

proptest! {
    #[test]
    fn normal_cdf_symmetry(z in -12.0f64..12.0) {
        let s = normal_cdf(z) + normal_cdf(-z);
        prop_assert!((s - 1.0).abs() <= 1e-12, "sum = {s}");
    }

    #[test]
    fn miss_prob_equals_cdf_of_standardized_gap(
        x in -50.0f64..50.0,
        r in -50.0f64..50.0,
        sigma in 1e-3f64..1e3,
    ) {
        let p = miss_prob(x, r, sigma).unwrap();
        prop_assert_eq!(p, normal_cdf((x - r) / sigma));
    }

    #[test]
    fn gaussian_quantile_round_trip(
        mean in -10.0f64..10.0,
        sd in 0.05f64..20.0,
        z in -5.0f64..5.0,
    ) {
        let q = ScoreDistribution::gaussian(mean, sd).unwrap();
        let r = mean + sd * z;
        let back = q.quantile(q.survival(r)).unwrap();
        prop_assert!((back - r).abs() <= 1e-9 * sd.max(1.0), "r = {r}, back = {back}");
    }

    #[test]
    fn exact_tau_is_symmetric_and_bounded((p1, p2) in two_permutations(32)) {
        let a = kendall::exact_tau(&p1, &p2).unwrap();
        let b = kendall::exact_tau(&p2, &p1).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn exact_overlap_is_a_bounded_multiple_of_inverse_k(
        (p1, p2) in two_permutations(32),
        k_seed in 0usize..1000,
    ) {
        let n = p1.len();
        let k = 1 + k_seed % n;
        let f = tkl::exact_overlap(&p1, &p2, k).unwrap();
        prop_assert_eq!(f, tkl::exact_overlap(&p2, &p1, k).unwrap());
        // counting identity: a multiple of 1/k between the pigeonhole floor
        // 2k - n and k
        let count = f * k as f64;
        prop_assert!((count - count.round()).abs() < 1e-9);
        prop_assert!(count >= (2 * k) as f64 - n as f64 - 1e-9);
        prop_assert!(count <= k as f64 + 1e-9);
    }

    #[test]
    fn ranking_by_fisher_score_matches_ranking_by_abs_correlation(
        cs in prop::collection::vec(-0.999f64..0.999, 2..64),
    ) {
        let scores: Vec<f64> = cs.iter().map(|c| fisher_score(*c).unwrap()).collect();
        let abs: Vec<f64> = cs.iter().map(|c| c.abs()).collect();
        prop_assert_eq!(rank_scores(&abs).unwrap(), rank_scores(&scores).unwrap());
    }

    #[test]
    fn rank_scores_yields_a_permutation(scores in prop::collection::vec(-1e6f64..1e6, 2..128)) {
        let ranks = rank_scores(&scores).unwrap();
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        let expected: Vec<u32> = (1..=scores.len() as u32).collect();
        prop_assert_eq!(sorted, expected);
    }

    #[test]
    fn bvn_reflection_identity(
        h in -4.0f64..4.0,
        k in -4.0f64..4.0,
        rho in -0.999f64..0.999,
    ) {
        let lhs = bvn::upper_orthant(h, k, rho) + bvn::upper_orthant(h, -k, -rho);
        prop_assert!((lhs - normal_cdf(-h)).abs() <= 1e-10, "lhs = {lhs}");
    }

    #[test]
    fn permutation_shuffle_strategy_is_exercised(p in permutation_strategy(16)) {
        prop_assert!(kendall::exact_tau(&p, &p).unwrap() == 1.0);
    }
}
