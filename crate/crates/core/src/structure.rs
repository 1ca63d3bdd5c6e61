//! Hierarchy search from full rankings.
//!
//! Small universes get an exact search: the penalized log-likelihood of a
//! hierarchy is a sum of per-node terms that depend only on the node's item
//! set and split, so the best hierarchy over every subset is found by
//! dynamic programming. Larger universes get a greedy top-down splitter that
//! cuts where the empirical tripletwise dependence across the cut is lowest.

use std::collections::HashMap;

use crate::dataset::Dataset;
use crate::error::{domain, Result};
use crate::hierarchy::{bipartitions, Hierarchy};
use crate::items::ItemSet;
use crate::perm::{binomial, factorial, lex_rank, pattern_rank};
use crate::ranking::Ranking;

pub const DEFAULT_EXACT_CAP: usize = 6;
pub const DEFAULT_GREEDY_MAX_SIDE: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct StructureConfig {
    /// Largest universe searched exhaustively.
    pub exact_cap: usize,
    /// Largest side the greedy splitter peels off in one cut.
    pub greedy_max_side: usize,
}

impl Default for StructureConfig {
    fn default() -> Self {
        StructureConfig { exact_cap: DEFAULT_EXACT_CAP, greedy_max_side: DEFAULT_GREEDY_MAX_SIDE }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnedStructure {
    pub hierarchy: Hierarchy,
    /// Penalized log-likelihood of `hierarchy` (exact mode only).
    pub bic: Option<f64>,
    /// Fewer observations than free parameters of the sparsest hierarchy.
    pub insufficient_data: bool,
}

/// Learns a hierarchy from a dataset of full rankings.
///
/// Exact mode maximizes `loglik − (free parameters / 2)·ln N` over all
/// hierarchies. Two-item subsets are kept as leaves, which is the same
/// family as splitting them, except that a two-item universe is returned as
/// its unique split. Near-ties (relative 1e-9) go to the smaller
/// fingerprint.
pub fn learn_structure(data: &Dataset, cfg: &StructureConfig) -> Result<LearnedStructure> {
    let full =
        data.full_rankings().ok_or_else(|| crate::Error::Domain("structure learning needs full rankings".into()))?;
    let weighted: Vec<(Ranking, f64)> = full.into_iter().map(|(r, c)| (r, c as f64)).collect();
    learn_structure_weighted(&weighted, data.universe().all(), cfg)
}

/// As [`learn_structure`] over weighted full rankings of `universe`; the
/// total weight is the sample size in the penalty.
pub fn learn_structure_weighted(
    data: &[(Ranking, f64)],
    universe: ItemSet,
    cfg: &StructureConfig,
) -> Result<LearnedStructure> {
    let total: f64 = data.iter().map(|(_, c)| c).sum();
    if data.is_empty() || total.is_nan() || total <= 0.0 {
        return domain("structure learning needs at least one record");
    }
    if data.iter().any(|(r, c)| r.items() != universe || !(c.is_finite() && *c >= 0.0)) {
        return domain("weighted rankings must cover the universe with nonnegative weights");
    }
    let n = universe.len();
    let insufficient_data = total < (n * (n - 1) / 2) as f64;
    if n <= cfg.exact_cap {
        let (bic, hierarchy) = exact_search(data, universe, total);
        Ok(LearnedStructure { hierarchy, bic: Some(bic), insufficient_data })
    } else {
        if cfg.greedy_max_side == 0 {
            return domain("greedy_max_side must be at least 1");
        }
        let hierarchy = greedy_split(data, universe, universe, cfg.greedy_max_side);
        Ok(LearnedStructure { hierarchy, bic: None, insufficient_data })
    }
}

fn entropy_term(counts: &[f64], total: f64) -> f64 {
    counts.iter().filter(|&&c| c > 0.0).map(|&c| c * (c / total).ln()).sum()
}

fn leaf_loglik(data: &[(Ranking, f64)], s: ItemSet, total: f64) -> f64 {
    let members = s.to_vec();
    let mut counts = vec![0.0; factorial(members.len()) as usize];
    let mut local = Vec::with_capacity(members.len());
    for (r, c) in data {
        local.clear();
        local.extend(r.order().iter().filter(|&&i| s.contains(i)).map(|i| members.binary_search(i).unwrap()));
        counts[lex_rank(&local)] += c;
    }
    entropy_term(&counts, total)
}

fn split_loglik(data: &[(Ranking, f64)], s: ItemSet, a: ItemSet, total: f64) -> f64 {
    let mut counts = vec![0.0; binomial(s.len(), a.len()) as usize];
    let mut bits = Vec::with_capacity(s.len());
    for (r, c) in data {
        bits.clear();
        bits.extend(r.order().iter().filter(|&&i| s.contains(i)).map(|&i| !a.contains(i)));
        counts[pattern_rank(&bits)] += c;
    }
    entropy_term(&counts, total)
}

fn better(a: &(f64, Hierarchy), b: &(f64, Hierarchy)) -> bool {
    let tol = 1e-9 * (1.0 + a.0.abs().max(b.0.abs()));
    if a.0 > b.0 + tol {
        true
    } else if a.0 < b.0 - tol {
        false
    } else {
        a.1.fingerprint() < b.1.fingerprint()
    }
}

fn exact_search(data: &[(Ranking, f64)], universe: ItemSet, total: f64) -> (f64, Hierarchy) {
    let penalty = 0.5 * total.ln();
    let items = universe.to_vec();
    let mut subsets: Vec<ItemSet> = (1u64..(1u64 << items.len()))
        .map(|m| (0..items.len()).filter(|j| m & (1 << j) != 0).map(|j| items[j]).collect())
        .collect();
    subsets.sort_by_key(|s: &ItemSet| (s.len(), s.bits()));
    let mut best: HashMap<ItemSet, (f64, Hierarchy)> = HashMap::new();
    for s in subsets {
        let k = s.len();
        let leaf = || {
            let params = factorial(k) as f64 - 1.0;
            (leaf_loglik(data, s, total) - params * penalty, Hierarchy::Leaf(s))
        };
        if k == 1 || (k == 2 && s != universe) {
            best.insert(s, leaf());
            continue;
        }
        let mut cur: Option<(f64, Hierarchy)> = if k == 2 { None } else { Some(leaf()) };
        for (a, b) in bipartitions(s) {
            let params = binomial(k, a.len()) as f64 - 1.0;
            let (sa, ha) = &best[&a];
            let (sb, hb) = &best[&b];
            let score = split_loglik(data, s, a, total) - params * penalty + sa + sb;
            let cand = (score, Hierarchy::split(ha.clone(), hb.clone()).unwrap());
            if cur.as_ref().is_none_or(|c| better(&cand, c)) {
                cur = Some(cand);
            }
        }
        best.insert(s, cur.unwrap());
    }
    best.remove(&universe).unwrap()
}

/// Empirical mutual information between the rank of `i` within the node and
/// the indicator that `j` precedes `k`, for every such triplet.
struct TripletStats {
    members: Vec<usize>,
    /// `mi[i][j][k]` over local positions, `j < k`, `i ∉ {j, k}`.
    mi: Vec<Vec<Vec<f64>>>,
}

impl TripletStats {
    fn new(data: &[(Ranking, f64)], s: ItemSet) -> Self {
        let members = s.to_vec();
        let m = members.len();
        // joint[i][j][k][rank][bit]
        let mut joint = vec![vec![vec![vec![[0.0f64; 2]; m]; m]; m]; m];
        let mut rel = vec![0usize; m];
        let mut total = 0.0;
        for (r, c) in data {
            let mut pos = 0;
            for &item in r.order() {
                if s.contains(item) {
                    rel[members.binary_search(&item).unwrap()] = pos;
                    pos += 1;
                }
            }
            total += c;
            for i in 0..m {
                for j in 0..m {
                    if j == i {
                        continue;
                    }
                    for k in j + 1..m {
                        if k == i {
                            continue;
                        }
                        joint[i][j][k][rel[i]][usize::from(rel[j] < rel[k])] += c;
                    }
                }
            }
        }
        let mut mi = vec![vec![vec![0.0; m]; m]; m];
        for i in 0..m {
            for j in 0..m {
                for k in j + 1..m {
                    if i == j || i == k {
                        continue;
                    }
                    let t = &joint[i][j][k];
                    let pb = [0, 1].map(|b| t.iter().map(|row| row[b]).sum::<f64>() / total);
                    let mut acc = 0.0;
                    for row in t {
                        let pr = (row[0] + row[1]) / total;
                        for b in 0..2 {
                            let p = row[b] / total;
                            if p > 0.0 {
                                acc += p * (p / (pr * pb[b])).ln();
                            }
                        }
                    }
                    mi[i][j][k] = acc.max(0.0);
                }
            }
        }
        TripletStats { members, mi }
    }

    /// Mean dependence over triplets with the single item on one side of the
    /// cut and the pair on the other.
    fn cross_score(&self, a: ItemSet) -> f64 {
        let m = self.members.len();
        let side: Vec<bool> = self.members.iter().map(|&i| a.contains(i)).collect();
        let (mut sum, mut count) = (0.0, 0usize);
        for i in 0..m {
            for j in 0..m {
                for k in j + 1..m {
                    if i == j || i == k || side[j] != side[k] || side[i] == side[j] {
                        continue;
                    }
                    sum += self.mi[i][j][k];
                    count += 1;
                }
            }
        }
        if count == 0 {
            f64::INFINITY
        } else {
            sum / count as f64
        }
    }
}

fn subsets_up_to(items: &[usize], max: usize) -> Vec<ItemSet> {
    fn go(items: &[usize], start: usize, max: usize, cur: ItemSet, out: &mut Vec<ItemSet>) {
        for j in start..items.len() {
            let mut next = cur;
            next.insert(items[j]);
            out.push(next);
            if next.len() < max {
                go(items, j + 1, max, next, out);
            }
        }
    }
    let mut out = Vec::new();
    go(items, 0, max, ItemSet::EMPTY, &mut out);
    out
}

fn greedy_split(data: &[(Ranking, f64)], s: ItemSet, universe: ItemSet, max_side: usize) -> Hierarchy {
    let k = s.len();
    if k == 1 || (k == 2 && s != universe) {
        return Hierarchy::Leaf(s);
    }
    if k == 2 {
        let v = s.to_vec();
        return Hierarchy::split_sets(ItemSet::singleton(v[0]), ItemSet::singleton(v[1])).unwrap();
    }
    let stats = TripletStats::new(data, s);
    let mut best: Option<(f64, ItemSet)> = None;
    for a in subsets_up_to(&stats.members, max_side.min(k - 1)) {
        let score = stats.cross_score(a);
        let replace = match best {
            None => true,
            Some((bs, ba)) => {
                score < bs - 1e-12 || (score <= bs + 1e-12 && (a.len(), a.bits()) < (ba.len(), ba.bits()))
            }
        };
        if replace {
            best = Some((score, a));
        }
    }
    let a = best.unwrap().1;
    let b = s.difference(a);
    Hierarchy::split(greedy_split(data, a, universe, max_side), greedy_split(data, b, universe, max_side)).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseDistribution;
    use crate::items::ItemUniverse;
    use std::sync::Arc;

    #[test]
    fn two_items_give_the_split() {
        let u = Arc::new(ItemUniverse::numbered(2).unwrap());
        let d = Dataset::from_rankings(u, &[Ranking::identity(2)]).unwrap();
        let l = learn_structure(&d, &StructureConfig::default()).unwrap();
        assert!(!l.hierarchy.is_leaf());
        assert!(!l.insufficient_data);
    }

    #[test]
    fn uniform_data_picks_sparsest_hierarchy() {
        for n in 3..=5 {
            let u = Arc::new(ItemUniverse::numbered(n).unwrap());
            let all: Vec<Ranking> = DenseDistribution::uniform(u.all()).unwrap().iter().map(|(r, _)| r).collect();
            let d = Dataset::from_rankings(u, &all).unwrap();
            let l = learn_structure(&d, &StructureConfig::default()).unwrap();
            assert_eq!(l.hierarchy.free_param_count(), (n * (n - 1) / 2) as u128, "n={n}");
        }
    }

    #[test]
    fn greedy_runs_and_covers_universe() {
        let u = Arc::new(ItemUniverse::numbered(5).unwrap());
        let rs: Vec<Ranking> = (0..50u64)
            .map(|s| {
                use rand::seq::SliceRandom;
                let mut v: Vec<usize> = (0..5).collect();
                v.shuffle(&mut crate::model::seeded_rng(s));
                Ranking::new(v).unwrap()
            })
            .collect();
        let d = Dataset::from_rankings(u.clone(), &rs).unwrap();
        let cfg = StructureConfig { exact_cap: 0, ..Default::default() };
        let l = learn_structure(&d, &cfg).unwrap();
        assert_eq!(l.hierarchy.items(), u.all());
        assert!(l.bic.is_none());
    }

    #[test]
    fn partial_data_is_rejected() {
        let u = Arc::new(ItemUniverse::numbered(3).unwrap());
        let d = Dataset::from_records(u.clone(), [(u.parse_observation("1").unwrap(), 1)]).unwrap();
        assert!(learn_structure(&d, &StructureConfig::default()).is_err());
    }
}
