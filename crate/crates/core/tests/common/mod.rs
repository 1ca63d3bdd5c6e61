#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use riffle::hierarchy::Hierarchy;
use riffle::items::{ItemSet, ItemUniverse};
use riffle::ranking::{PartialRanking, Ranking};
use riffle::RiffleModel;

pub fn universe(n: usize) -> Arc<ItemUniverse> {
    Arc::new(ItemUniverse::numbered(n).unwrap())
}

/// ((1,3) vs (4,5)) vs 2 over candidates 1..5.
pub fn apa_hierarchy() -> Hierarchy {
    Hierarchy::split(
        Hierarchy::split_sets(ItemSet::from_iter([0, 2]), ItemSet::from_iter([3, 4])).unwrap(),
        Hierarchy::Leaf(ItemSet::singleton(1)),
    )
    .unwrap()
}

/// Random binary hierarchy; sets of at most `max_leaf` items may stop as leaves.
pub fn random_hierarchy<R: Rng>(items: ItemSet, max_leaf: usize, rng: &mut R) -> Hierarchy {
    if items.len() == 1 || (items.len() <= max_leaf && rng.gen_bool(0.35)) {
        return Hierarchy::Leaf(items);
    }
    let mut v = items.to_vec();
    v.shuffle(rng);
    let cut = rng.gen_range(1..v.len());
    let a: ItemSet = v[..cut].iter().copied().collect();
    let b = items.difference(a);
    Hierarchy::split(random_hierarchy(a, max_leaf, rng), random_hierarchy(b, max_leaf, rng)).unwrap()
}

pub fn random_ranking<R: Rng>(n: usize, rng: &mut R) -> Ranking {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    Ranking::new(v).unwrap()
}

/// A random ranking with each gap independently turned into a tie.
pub fn random_partial<R: Rng>(n: usize, rng: &mut R) -> PartialRanking {
    let r = random_ranking(n, rng);
    let mut blocks = vec![ItemSet::singleton(r.order()[0])];
    for &i in &r.order()[1..] {
        if rng.gen_bool(0.5) {
            blocks.last_mut().unwrap().insert(i);
        } else {
            blocks.push(ItemSet::singleton(i));
        }
    }
    PartialRanking::new(blocks).unwrap()
}

pub fn random_model<R: Rng>(n: usize, max_leaf: usize, power: f64, rng: &mut R) -> RiffleModel {
    let h = random_hierarchy(ItemSet::full(n), max_leaf, rng);
    RiffleModel::random(universe(n), h, power, rng).unwrap()
}
