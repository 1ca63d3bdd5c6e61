mod common;

use proptest::prelude::*;
use riffle::dense::DenseDistribution;
use riffle::hierarchy::{all_full_hierarchies, bipartitions, Hierarchy};
use riffle::items::ItemSet;
use riffle::lab::{enumerate_partial_rankings, factors_wrt_hierarchy, hierarchy_residual};
use riffle::model::seeded_rng;
use riffle::ranking::{
    consistent_interleaving, contains, interleaving_of, join, kendall_tau, rank_sets, relative_ranking, restrict,
    PartialRanking, Ranking,
};
use riffle::RiffleModel;

use common::*;

fn all_rankings(n: usize) -> Vec<Ranking> {
    DenseDistribution::uniform(ItemSet::full(n)).unwrap().iter().map(|(r, _)| r).collect()
}

/// Pairwise reading of membership: every item of an earlier block precedes
/// every item of a later block.
fn contains_pairwise(obs: &PartialRanking, sigma: &Ranking) -> bool {
    let blocks = obs.blocks();
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            for x in blocks[i].iter() {
                for y in blocks[j].iter() {
                    if sigma.rank_of(x) > sigma.rank_of(y) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

#[test]
fn decomposition_round_trip_exhaustive() {
    for n in 2..=5 {
        for sigma in all_rankings(n) {
            for (a, b) in bipartitions(ItemSet::full(n)) {
                let tau = interleaving_of(&sigma, a, b).unwrap();
                let back = join(&tau, &relative_ranking(&sigma, a).unwrap(), &relative_ranking(&sigma, b).unwrap());
                assert_eq!(back.unwrap(), sigma);
            }
        }
    }
}

proptest! {
    #[test]
    fn decomposition_round_trip_random(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = seeded_rng(seed);
        let sigma = random_ranking(n, &mut rng);
        let split = random_hierarchy(ItemSet::full(n), 1, &mut rng);
        if let Hierarchy::Split { left, right, .. } = split {
            let (a, b) = (left.items(), right.items());
            let tau = interleaving_of(&sigma, a, b).unwrap();
            let back = join(&tau, &relative_ranking(&sigma, a).unwrap(), &relative_ranking(&sigma, b).unwrap()).unwrap();
            prop_assert_eq!(back, sigma);
        }
    }
}

#[test]
fn membership_formulations_agree_on_four_items() {
    let rankings = all_rankings(4);
    for obs in enumerate_partial_rankings(ItemSet::full(4)) {
        let sets = rank_sets(&obs.gamma());
        for sigma in &rankings {
            let by_rank =
                obs.blocks().iter().zip(&sets).all(|(b, r)| b.iter().all(|i| r.contains(&sigma.rank_of(i).unwrap())));
            let c = contains(&obs, sigma).unwrap();
            assert_eq!(c, by_rank);
            assert_eq!(c, contains_pairwise(&obs, sigma));
        }
    }
}

#[test]
fn membership_factors_through_the_split() {
    let mut rng = seeded_rng(18);
    for n in 2..=5 {
        let rankings = all_rankings(n);
        for _ in 0..6 {
            let obs = random_partial(n, &mut rng);
            for (a, b) in bipartitions(ItemSet::full(n)) {
                let (ra, rb) = (restrict(&obs, a).unwrap(), restrict(&obs, b).unwrap());
                for sigma in &rankings {
                    let tau = interleaving_of(sigma, a, b).unwrap();
                    let factored = consistent_interleaving(&tau, &obs, a, b).unwrap()
                        && contains(&ra, &relative_ranking(sigma, a).unwrap()).unwrap()
                        && contains(&rb, &relative_ranking(sigma, b).unwrap()).unwrap();
                    assert_eq!(contains(&obs, sigma).unwrap(), factored);
                }
            }
        }
    }
}

#[test]
fn kendall_tau_is_a_metric_on_four_items() {
    let rs = all_rankings(4);
    for x in &rs {
        for y in &rs {
            let dxy = kendall_tau(x, y).unwrap();
            assert_eq!(dxy, kendall_tau(y, x).unwrap());
            assert_eq!(dxy == 0, x == y);
            for z in &rs {
                assert!(kendall_tau(x, z).unwrap() <= dxy + kendall_tau(y, z).unwrap());
            }
        }
    }
}

#[test]
fn dense_tables_are_normalized() {
    let mut rng = seeded_rng(3);
    for n in 1..=7 {
        for _ in 0..5 {
            let m = random_model(n, 3, 2.0, &mut rng);
            assert!((m.to_dense().unwrap().total() - 1.0).abs() < 1e-10, "n={n}");
        }
    }
}

/// Upper 1e-4 quantile of chi-squared with `df` degrees of freedom, by the
/// Wilson-Hilferty cube approximation (z = 3.719 for 1e-4).
fn chi2_critical(df: f64) -> f64 {
    let z = 3.719;
    let c = 2.0 / (9.0 * df);
    df * (1.0 - c + z * c.sqrt()).powi(3)
}

#[test]
fn sampler_matches_evaluate() {
    let mut rng = seeded_rng(11);
    for trial in 0..3 {
        let m = random_model(4, 3, 1.0, &mut rng);
        let dense = m.to_dense().unwrap();
        let draws = 100_000;
        let mut counts = vec![0.0; dense.len()];
        for s in m.sample_many(draws, 500 + trial) {
            counts[dense.index_of(&s).unwrap()] += 1.0;
        }
        let mut stat = 0.0;
        let mut df = -1.0;
        for (c, p) in counts.iter().zip(dense.probs()) {
            let e = p * draws as f64;
            if e > 0.0 {
                stat += (c - e) * (c - e) / e;
                df += 1.0;
            } else {
                assert_eq!(*c, 0.0);
            }
        }
        assert!(stat < chi2_critical(df), "trial {trial}: chi2 {stat} with {df} df");
    }
}

#[test]
fn masses_of_one_type_sum_to_one() {
    let mut rng = seeded_rng(5);
    for n in 1..=5 {
        let m = random_model(n, 3, 1.0, &mut rng);
        let all = enumerate_partial_rankings(ItemSet::full(n));
        let mut types: Vec<Vec<usize>> = all.iter().map(|o| o.gamma()).collect();
        types.sort();
        types.dedup();
        for g in types {
            let total: f64 = all.iter().filter(|o| o.gamma() == g).map(|o| m.partial_ranking_mass(o).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-9, "n={n} type {g:?}: {total}");
        }
    }
}

#[test]
fn models_factor_along_their_own_hierarchy() {
    let mut rng = seeded_rng(9);
    for h in all_full_hierarchies(ItemSet::full(4)) {
        let m = RiffleModel::random(universe(4), h.clone(), 1.0, &mut rng).unwrap();
        assert!(hierarchy_residual(&m.to_dense().unwrap(), &h).unwrap() <= 1e-10);
    }
    let h = Hierarchy::split_sets(ItemSet::from_iter([0, 1]), ItemSet::from_iter([2, 3])).unwrap();
    let crossing = Hierarchy::split_sets(ItemSet::from_iter([0, 2]), ItemSet::from_iter([1, 3])).unwrap();
    let m = RiffleModel::random(universe(4), h, 1.0, &mut seeded_rng(1)).unwrap();
    assert!(!factors_wrt_hierarchy(&m.to_dense().unwrap(), &crossing, 1e-9).unwrap());
    let flat = DenseDistribution::uniform(ItemSet::full(4)).unwrap();
    assert!(factors_wrt_hierarchy(&flat, &crossing, 1e-12).unwrap());
}

#[test]
fn evaluation_agrees_with_partial_mass_on_full_rankings() {
    let mut rng = seeded_rng(13);
    let m = random_model(5, 3, 1.0, &mut rng);
    for sigma in all_rankings(5) {
        let a = m.evaluate(&sigma).unwrap();
        let b = m.partial_ranking_mass(&PartialRanking::from_ranking(&sigma)).unwrap();
        assert!((a - b).abs() <= 1e-15);
    }
}
