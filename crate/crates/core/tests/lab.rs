mod common;

use std::collections::{BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use riffle::dense::DenseDistribution;
use riffle::exec::Exec;
use riffle::items::{ItemSet, ItemUniverse};
use riffle::lab::{
    enumerate_partial_rankings, is_completely_decomposable, pspan, pspan_rankings, root_partitions_factor, sup, Census,
    SubsetObservation, DEFAULT_TOLERANCE,
};
use riffle::model::seeded_rng;
use riffle::ranking::{PartialRanking, Ranking};
use riffle::Error;

use common::*;

fn members(items: ItemSet, obs: &PartialRanking) -> BTreeSet<usize> {
    assert_eq!(obs.items(), items);
    SubsetObservation::from_partial(obs).unwrap().indices().clone()
}

fn subset(items: ItemSet, mask: u64) -> SubsetObservation {
    SubsetObservation::from_indices(items, (0..64).filter(|i| mask & (1 << i) != 0).collect()).unwrap()
}

#[test]
fn partial_rankings_of_four_items_are_decomposable_and_others_are_not() {
    let items = ItemSet::full(4);
    let prs = enumerate_partial_rankings(items);
    let pr_sets: HashSet<BTreeSet<usize>> = prs.iter().map(|p| members(items, p)).collect();
    let mut rng = seeded_rng(21);
    for _ in 0..100 {
        let p = prs.choose(&mut rng).unwrap();
        assert!(SubsetObservation::from_partial(p).unwrap().is_completely_decomposable(DEFAULT_TOLERANCE).unwrap());
    }
    let mut checked = 0;
    while checked < 100 {
        let size = rng.gen_range(1..24);
        let mut idx: Vec<usize> = (0..24).collect();
        idx.shuffle(&mut rng);
        let set: BTreeSet<usize> = idx[..size].iter().copied().collect();
        if pr_sets.contains(&set) {
            continue;
        }
        let x = SubsetObservation::from_indices(items, set).unwrap();
        assert!(!x.is_completely_decomposable(DEFAULT_TOLERANCE).unwrap());
        checked += 1;
    }
}

#[test]
fn pspan_is_the_intersection_of_containing_partial_rankings() {
    let items = ItemSet::full(3);
    let prs: Vec<BTreeSet<usize>> = enumerate_partial_rankings(items).iter().map(|p| members(items, p)).collect();
    for mask in 1u64..64 {
        let x = subset(items, mask);
        let direct = prs
            .iter()
            .filter(|p| x.indices().is_subset(p))
            .fold(None::<BTreeSet<usize>>, |acc, p| {
                Some(match acc {
                    None => p.clone(),
                    Some(a) => a.intersection(p).copied().collect(),
                })
            })
            .unwrap();
        let span = pspan_rankings(&x.rankings()).unwrap();
        assert_eq!(members(items, &span), direct, "mask {mask:#b}");
    }
}

#[test]
fn pspan_of_partial_rankings_over_four_items_is_the_intersection() {
    let items = ItemSet::full(4);
    let prs = enumerate_partial_rankings(items);
    let sets: Vec<BTreeSet<usize>> = prs.iter().map(|p| members(items, p)).collect();
    let mut rng = seeded_rng(31);
    for _ in 0..300 {
        let k = rng.gen_range(1..=3);
        let xs: Vec<PartialRanking> = (0..k).map(|_| prs.choose(&mut rng).unwrap().clone()).collect();
        let union: BTreeSet<usize> = xs.iter().flat_map(|p| members(items, p)).collect();
        let direct = sets
            .iter()
            .filter(|s| union.is_subset(s))
            .fold(None::<BTreeSet<usize>>, |acc, s| {
                Some(match acc {
                    None => s.clone(),
                    Some(a) => a.intersection(s).copied().collect(),
                })
            })
            .unwrap();
        assert_eq!(members(items, &pspan(&xs).unwrap()), direct, "{xs:?}");
    }
}

#[test]
fn rspan_laws_on_three_items() {
    let items = ItemSet::full(3);
    let c = Census::new(items, DEFAULT_TOLERANCE, Exec::default()).unwrap();
    let spans: Vec<SubsetObservation> = (1u64..64).map(|m| c.rspan(&subset(items, m)).unwrap()).collect();
    for m in 1u64..64 {
        let x = subset(items, m);
        let s = &spans[m as usize - 1];
        assert!(x.is_subset(s));
        assert_eq!(&c.rspan(s).unwrap(), s);
        for m2 in 1u64..64 {
            if m & m2 == m {
                assert!(s.is_subset(&spans[m2 as usize - 1]));
            }
        }
    }
}

#[test]
fn rspan_over_four_items_is_refused() {
    let x = SubsetObservation::from_rankings(ItemSet::full(4), &[Ranking::identity(4)]).unwrap();
    assert!(matches!(riffle::lab::rspan(&x), Err(Error::Capacity { .. })));
}

#[test]
fn decomposable_functions_without_pair_blocks_are_uniform() {
    let mut rng = seeded_rng(41);
    for n in 1..=4 {
        let items = ItemSet::full(n);
        for obs in enumerate_partial_rankings(items) {
            let x = SubsetObservation::from_partial(&obs).unwrap();
            let flat = x.indicator().unwrap();
            assert!(is_completely_decomposable(&flat, DEFAULT_TOLERANCE).unwrap());
            if obs.gamma().contains(&2) || x.len() < 2 {
                continue;
            }
            for _ in 0..3 {
                let target = *x.indices().iter().collect::<Vec<_>>().choose(&mut rng).unwrap();
                let factor = rng.gen_range(1.1..3.0);
                let probs =
                    flat.probs().iter().enumerate().map(|(i, &p)| if i == *target { p * factor } else { p }).collect();
                let bumped = DenseDistribution::new(items, probs).unwrap().normalized().unwrap();
                assert!(!is_completely_decomposable(&bumped, DEFAULT_TOLERANCE).unwrap(), "{obs:?}");
            }
        }
    }
}

#[test]
fn pair_blocks_admit_non_uniform_decomposable_functions() {
    let u = ItemUniverse::new(&["Corn", "Peas", "Apples"]).unwrap();
    let mut probs = vec![0.0; 6];
    let probe = DenseDistribution::uniform(u.all()).unwrap();
    probs[probe.index_of(&u.parse_ranking("Corn|Peas|Apples").unwrap()).unwrap()] = 2.0 / 3.0;
    probs[probe.index_of(&u.parse_ranking("Peas|Corn|Apples").unwrap()).unwrap()] = 1.0 / 3.0;
    let h = DenseDistribution::new(u.all(), probs).unwrap();
    assert!(is_completely_decomposable(&h, DEFAULT_TOLERANCE).unwrap());
}

fn bar_deletions(p: &PartialRanking) -> Vec<PartialRanking> {
    (0..p.blocks().len().saturating_sub(1)).map(|i| p.merge_blocks(i, i + 1)).collect()
}

#[test]
fn containment_is_reachability_by_bar_deletion() {
    let items = ItemSet::full(3);
    let prs = enumerate_partial_rankings(items);
    for from in &prs {
        let mut reach = HashSet::new();
        let mut queue = VecDeque::from([from.clone()]);
        while let Some(p) = queue.pop_front() {
            if reach.insert(p.clone()) {
                queue.extend(bar_deletions(&p));
            }
        }
        for to in &prs {
            let subset = members(items, from).is_subset(&members(items, to));
            assert_eq!(subset, reach.contains(to), "{from:?} -> {to:?}");
        }
    }
}

#[test]
fn supremum_is_least_upper_bound() {
    let items = ItemSet::full(3);
    let prs = enumerate_partial_rankings(items);
    for x in &prs {
        for y in &prs {
            let s = sup(x, y).unwrap();
            let sm = members(items, &s);
            assert!(members(items, x).is_subset(&sm) && members(items, y).is_subset(&sm));
            for z in &prs {
                let zm = members(items, z);
                if members(items, x).is_subset(&zm) && members(items, y).is_subset(&zm) {
                    assert!(sm.is_subset(&zm));
                }
            }
        }
    }
    let other = PartialRanking::trivial(ItemSet::full(2)).unwrap();
    assert!(sup(&prs[0], &other).is_err());
    assert!(pspan(&[prs[0].clone(), other]).is_err());
}

#[test]
fn census_report_lists_every_subset() {
    let c = Census::new(ItemSet::full(3), DEFAULT_TOLERANCE, Exec::Sequential).unwrap();
    let par = Census::new(ItemSet::full(3), DEFAULT_TOLERANCE, Exec::Parallel).unwrap();
    assert_eq!(c.rows(), par.rows());
    let tsv = c.to_tsv();
    assert_eq!(tsv.lines().count(), 64);
    assert!(tsv.starts_with("subset_id\tcardinality\tis_partial_ranking\tis_completely_decomposable\n"));
}

/// Probes whether passing the factorization test at every root bipartition
/// already implies complete decomposability. Complete decomposability always
/// implies the root check; the converse is reported, not assumed.
#[test]
fn root_level_probe() {
    let mut candidates: Vec<DenseDistribution> = Vec::new();
    // Every nonempty subset indicator over three and over four items up to size 3.
    for mask in 1u64..64 {
        candidates.push(subset(ItemSet::full(3), mask).indicator().unwrap());
    }
    for a in 0..24usize {
        for b in a..24 {
            for c in b..24 {
                let set: BTreeSet<usize> = [a, b, c].into_iter().collect();
                candidates.push(SubsetObservation::from_indices(ItemSet::full(4), set).unwrap().indicator().unwrap());
            }
        }
    }
    // Random hierarchical models and their two-component mixtures.
    let mut rng = seeded_rng(99);
    for _ in 0..300 {
        let n = rng.gen_range(3..=5);
        let p = random_model(n, 3, 2.0, &mut rng).to_dense().unwrap();
        let q = random_model(n, 3, 2.0, &mut rng).to_dense().unwrap();
        let mix: Vec<f64> = p.probs().iter().zip(q.probs()).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
        candidates.push(p);
        candidates.push(DenseDistribution::new(ItemSet::full(n), mix).unwrap());
    }
    let (mut root_only, mut both) = (0, 0);
    for p in &candidates {
        let cd = is_completely_decomposable(p, DEFAULT_TOLERANCE).unwrap();
        let root = root_partitions_factor(&p.normalized().unwrap(), DEFAULT_TOLERANCE).unwrap();
        assert!(!cd || root, "complete decomposability must imply the root check");
        if root && !cd {
            root_only += 1;
        }
        if root && cd {
            both += 1;
        }
    }
    println!(
        "root-level probe: {} candidates, {both} pass both, {root_only} pass the root check only",
        candidates.len()
    );
    assert_eq!(root_only, 0, "found functions that factor at every root split but not completely");
}
