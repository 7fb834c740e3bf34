mod common;

use common::{brute_expected_count, random_graph, random_partition};
use fairspread::diffusion::{
    estimate_spread, exact_spread, fair_reward, marginal_reward, CascadeConfig, ExactOracle, SampledWorlds,
    SpreadOracle,
};
use fairspread::graph::{CommunityPartition, Graph};
use fairspread::rng::StreamSeed;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn exact_spread_matches_independent_enumeration() {
    let mut rng = StreamSeed::new(11).rng();
    for _ in 0..30 {
        let n = rng.random_range(2..9);
        let g = random_graph(&mut rng, n, 10, 0.5);
        let part = CommunityPartition::single(n).unwrap();
        let p = [0.2, 0.5, 0.8][rng.random_range(0..3)];
        let seeds = vec![rng.random_range(0..n)];
        let exact = exact_spread(&g, &part, &seeds, p).unwrap();
        let brute = brute_expected_count(&g, &seeds, p) / n as f64;
        assert!((exact.total_outreach - brute).abs() < 1e-12, "{} vs {brute}", exact.total_outreach);
    }
}

#[test]
fn monte_carlo_is_within_four_standard_errors_of_exact() {
    let mut rng = StreamSeed::new(12).rng();
    let m = 20_000;
    for i in 0..20 {
        let n = rng.random_range(3..=10);
        let g = random_graph(&mut rng, n, 12, 0.4);
        let part = random_partition(&mut rng, n);
        let p = [0.2, 0.5, 0.8][i % 3];
        let seeds = vec![rng.random_range(0..n)];
        let exact = exact_spread(&g, &part, &seeds, p).unwrap();
        let est = estimate_spread(&g, &part, &seeds, &CascadeConfig::new(p, m).unwrap(), StreamSeed::new(i as u64))
            .unwrap();
        let se = exact.std_total / (m as f64).sqrt();
        assert!(
            (est.total_outreach - exact.total_outreach).abs() <= 4.0 * se + 1e-12,
            "graph {i}: {} vs {} (se {se})",
            est.total_outreach,
            exact.total_outreach
        );
    }
}

#[test]
fn parallel_and_serial_estimates_are_identical() {
    let mut rng = StreamSeed::new(13).rng();
    let g = random_graph(&mut rng, 60, usize::MAX, 0.08);
    let part = random_partition(&mut rng, 60);
    let config = CascadeConfig::new(0.3, 3000).unwrap();
    let parallel = estimate_spread(&g, &part, &[0, 1], &config, 5.into()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| estimate_spread(&g, &part, &[0, 1], &config, 5.into()).unwrap());
    assert_eq!(parallel, serial);
}

#[test]
fn marginal_rewards_telescope_to_cumulative_reward() {
    let mut rng = StreamSeed::new(14).rng();
    let g = random_graph(&mut rng, 40, usize::MAX, 0.1);
    let part = random_partition(&mut rng, 40);
    let config = CascadeConfig::new(0.2, 500).unwrap();
    let order = [3, 17, 25];
    let mut sum = 0.0;
    let mut current = Vec::new();
    for &v in &order {
        sum += marginal_reward(&g, &part, &current, v, 1.0, &config, 9.into()).unwrap();
        current.push(v);
    }
    let total = fair_reward(&estimate_spread(&g, &part, &order, &config, 9.into()).unwrap(), 1.0).unwrap();
    assert!((sum - total).abs() < 1e-12);
}

#[test]
fn sampled_worlds_give_integer_submodular_objective() {
    let mut rng = StreamSeed::new(15).rng();
    let g = random_graph(&mut rng, 25, usize::MAX, 0.15);
    let worlds = SampledWorlds::new(&g, &CascadeConfig::new(0.3, 100).unwrap(), 2.into()).unwrap();
    for _ in 0..200 {
        let a = rng.random_range(0..25);
        let b = rng.random_range(0..25);
        let v = rng.random_range(0..25);
        let f = |s: &[usize]| worlds.expected_activated(s);
        let small = f(&[v, a]) - f(&[a]);
        let large = f(&[v, a, b]) - f(&[a, b]);
        assert!(small >= large, "{small} < {large}");
        assert!(f(&[a, b]) >= f(&[a]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn exact_spread_is_monotone_and_submodular(seed in any::<u64>(), p in 0.05f64..0.95) {
        let mut rng = StreamSeed::new(seed).rng();
        let n = rng.random_range(3..8);
        let g = random_graph(&mut rng, n, 9, 0.5);
        let oracle = ExactOracle::new(&g, p).unwrap();
        let f = |s: &[usize]| oracle.expected_activated(s);
        for u in 0..n {
            for v in 0..n {
                if u == v { continue; }
                prop_assert!(f(&[u, v]) >= f(&[u]) - 1e-12);
                for w in 0..n {
                    if w == u || w == v { continue; }
                    prop_assert!(f(&[w, u]) - f(&[u]) >= f(&[w, u, v]) - f(&[u, v]) - 1e-12);
                }
            }
        }
    }

    #[test]
    fn estimates_are_bounded_fractions(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let mut rng = StreamSeed::new(seed).rng();
        let n = rng.random_range(2..20);
        let g = random_graph(&mut rng, n, usize::MAX, 0.2);
        let part = random_partition(&mut rng, n);
        let est = estimate_spread(&g, &part, &[0], &CascadeConfig::new(p, 50).unwrap(), seed.into()).unwrap();
        prop_assert!(est.maximin_fairness() <= est.total_outreach + 1e-12);
        prop_assert!((0.0..=1.0).contains(&est.disparity()));
        prop_assert!(est.std_total >= 0.0 && est.community_std.iter().all(|&s| s >= 0.0));
        prop_assert!(est.total_outreach >= 1.0 / n as f64 - 1e-12);
    }
}

#[test]
fn star_certain_spread_reaches_everyone() {
    let g = Graph::from_edges(6, (1..6).map(|l| (0, l))).unwrap();
    let part = CommunityPartition::single(6).unwrap();
    let est = estimate_spread(&g, &part, &[3], &CascadeConfig::new(1.0, 10).unwrap(), 1.into()).unwrap();
    assert_eq!(est.total_outreach, 1.0);
}
