//! Brute-force decomposability checks over explicit distributions.
//!
//! Everything here works on [`DenseDistribution`]s and exhaustive
//! enumeration, so it only scales to a handful of items. It is the ground
//! truth for the factored code and for the structural claims about
//! partial rankings (completely decomposable subsets are exactly the
//! partial rankings; span operators agree).

use std::collections::{BTreeSet, HashSet};

use crate::dense::{check_dense_cap, DenseDistribution, DEFAULT_DENSE_CAP};
use crate::error::{domain, Error, Result};
use crate::exec::Exec;
use crate::hierarchy::{bipartitions, Hierarchy};
use crate::items::ItemSet;
use crate::perm::{lex_rank, pattern_rank};
use crate::ranking::{kendall_tau, PartialRanking, Ranking};

/// Default residual tolerance for factorization checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Largest item count for the exhaustive complete-decomposability check.
pub const DEFAULT_LAB_CAP: usize = 5;

/// Largest item count for the exhaustive subset census behind `rspan`.
pub const RSPAN_CAP: usize = 3;

/// Marginal factors of a distribution with respect to one split.
#[derive(Clone, Debug)]
pub struct FactorizationReport {
    pub factors: bool,
    /// Interleaving marginal `m`, indexed by pattern rank (A = first set).
    pub interleaving: Vec<f64>,
    /// Relative-ranking marginal `f` of the first set.
    pub left: DenseDistribution,
    /// Relative-ranking marginal `g` of the second set.
    pub right: DenseDistribution,
    /// `max_σ |p(σ) − m(τ(σ))·f(φ_A(σ))·g(φ_B(σ))|` on the normalized input.
    pub residual: f64,
}

/// Checks riffle independence of `(a, b)` under `p` (normalized first).
pub fn factors_wrt_partition(p: &DenseDistribution, a: ItemSet, b: ItemSet, tol: f64) -> Result<FactorizationReport> {
    if a.is_empty() || b.is_empty() || !a.is_disjoint(b) || a.union(b) != p.items() {
        return domain("(A, B) must split the distribution's items into two nonempty halves");
    }
    let p = p.normalized()?;
    let m = p.interleaving_marginal(a);
    let f = p.relative_marginal(a)?;
    let g = p.relative_marginal(b)?;
    let (av, bv) = (a.to_vec(), b.to_vec());
    let n = av.len() + bv.len();
    let mut bits = vec![false; n];
    let mut la = Vec::with_capacity(av.len());
    let mut lb = Vec::with_capacity(bv.len());
    let mut residual: f64 = 0.0;
    for (s, prob) in p.iter() {
        la.clear();
        lb.clear();
        for (k, &i) in s.order().iter().enumerate() {
            if a.contains(i) {
                bits[k] = false;
                la.push(av.binary_search(&i).unwrap());
            } else {
                bits[k] = true;
                lb.push(bv.binary_search(&i).unwrap());
            }
        }
        let product = m[pattern_rank(&bits)] * f.probs()[lex_rank(&la)] * g.probs()[lex_rank(&lb)];
        residual = residual.max((prob - product).abs());
    }
    Ok(FactorizationReport { factors: residual <= tol, interleaving: m, left: f, right: g, residual })
}

/// Largest factorization residual over every split of `h`, recursing into
/// the relative-ranking marginals.
pub fn hierarchy_residual(p: &DenseDistribution, h: &Hierarchy) -> Result<f64> {
    if h.items() != p.items() {
        return domain("hierarchy and distribution cover different items");
    }
    match h {
        Hierarchy::Leaf(_) => Ok(0.0),
        Hierarchy::Split { left, right, .. } => {
            let rep = factors_wrt_partition(p, left.items(), right.items(), 0.0)?;
            let l = hierarchy_residual(&rep.left, left)?;
            let r = hierarchy_residual(&rep.right, right)?;
            Ok(rep.residual.max(l).max(r))
        }
    }
}

/// Whether `p` factors riffle independently with respect to `h`.
pub fn factors_wrt_hierarchy(p: &DenseDistribution, h: &Hierarchy, tol: f64) -> Result<bool> {
    Ok(hierarchy_residual(p, h)? <= tol)
}

/// Whether `p` factors with respect to every binary hierarchy over its items.
///
/// Each (node item set, split) pair occurring in some hierarchy is checked
/// once; the node's distribution is the relative-ranking marginal of its
/// item set, which does not depend on the path leading to it.
pub fn is_completely_decomposable(p: &DenseDistribution, tol: f64) -> Result<bool> {
    is_completely_decomposable_with(p, tol, DEFAULT_LAB_CAP)
}

pub fn is_completely_decomposable_with(p: &DenseDistribution, tol: f64, cap: usize) -> Result<bool> {
    check_dense_cap(p.items().len(), cap)?;
    let p = p.normalized()?;
    let items = p.items().to_vec();
    let k = items.len();
    for mask in 1u64..(1u64 << k) {
        if mask.count_ones() < 2 {
            continue;
        }
        let sub: ItemSet = (0..k).filter(|j| mask & (1 << j) != 0).map(|j| items[j]).collect();
        let marg = if sub == p.items() { p.clone() } else { p.relative_marginal(sub)? };
        for (a, b) in bipartitions(sub) {
            if !factors_wrt_partition(&marg, a, b, tol)?.factors {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Root-level check only: every bipartition of the full item set factors.
/// Used to probe whether root-level independence implies full decomposability.
pub fn root_partitions_factor(p: &DenseDistribution, tol: f64) -> Result<bool> {
    for (a, b) in bipartitions(p.items()) {
        if !factors_wrt_partition(p, a, b, tol)?.factors {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A nonempty set of rankings, read as the indicator likelihood.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubsetObservation {
    items: ItemSet,
    /// Dense indices (see [`DenseDistribution`]) of the member rankings.
    members: BTreeSet<usize>,
}

impl SubsetObservation {
    pub fn from_rankings<'a, I: IntoIterator<Item = &'a Ranking>>(items: ItemSet, rankings: I) -> Result<Self> {
        check_dense_cap(items.len(), DEFAULT_DENSE_CAP)?;
        let probe = DenseDistribution::uniform(items)?;
        let mut members = BTreeSet::new();
        for r in rankings {
            members.insert(probe.index_of(r)?);
        }
        Self::from_indices(items, members)
    }

    pub fn from_indices(items: ItemSet, members: BTreeSet<usize>) -> Result<Self> {
        if members.is_empty() {
            return domain("subset observation must be nonempty");
        }
        let total = crate::perm::factorial(items.len()) as usize;
        if members.iter().any(|&i| i >= total) {
            return domain("subset member index out of range");
        }
        Ok(SubsetObservation { items, members })
    }

    pub fn from_partial(obs: &PartialRanking) -> Result<Self> {
        Self::from_rankings(obs.items(), obs.members().iter())
    }

    pub fn items(&self) -> ItemSet {
        self.items
    }

    pub fn indices(&self) -> &BTreeSet<usize> {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn rankings(&self) -> Vec<Ranking> {
        let probe = DenseDistribution::uniform(self.items).unwrap();
        self.members.iter().map(|&i| probe.ranking_at(i)).collect()
    }

    pub fn contains(&self, sigma: &Ranking) -> Result<bool> {
        let probe = DenseDistribution::uniform(self.items)?;
        Ok(self.members.contains(&probe.index_of(sigma)?))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.items == other.items && self.members.is_subset(&other.members)
    }

    /// Normalized indicator function.
    pub fn indicator(&self) -> Result<DenseDistribution> {
        let total = crate::perm::factorial(self.items.len()) as usize;
        let w = 1.0 / self.members.len() as f64;
        let probs = (0..total).map(|i| if self.members.contains(&i) { w } else { 0.0 }).collect();
        DenseDistribution::new(self.items, probs)
    }

    pub fn is_completely_decomposable(&self, tol: f64) -> Result<bool> {
        is_completely_decomposable(&self.indicator()?, tol)
    }
}

/// All ordered set partitions of `items` (the partial rankings over them).
pub fn enumerate_partial_rankings(items: ItemSet) -> Vec<PartialRanking> {
    fn go(rest: ItemSet, prefix: &mut Vec<ItemSet>, out: &mut Vec<PartialRanking>) {
        if rest.is_empty() {
            out.push(PartialRanking::from_blocks_unchecked(prefix.clone()));
            return;
        }
        let v = rest.to_vec();
        for mask in 1u64..(1u64 << v.len()) {
            let block: ItemSet = (0..v.len()).filter(|j| mask & (1 << j) != 0).map(|j| v[j]).collect();
            prefix.push(block);
            go(rest.difference(block), prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if !items.is_empty() {
        go(items, &mut Vec::new(), &mut out);
    }
    out
}

/// The coarsest partial ranking containing every element of `xs`.
///
/// Repeatedly finds two elements that relate some pair of items differently
/// (ahead, tied, behind) and, in every element separating the pair, merges
/// the blocks from one item's block to the other's. Terminates when all
/// elements coincide.
pub fn pspan(xs: &[PartialRanking]) -> Result<PartialRanking> {
    let Some(first) = xs.first() else {
        return domain("pspan of an empty set");
    };
    let items = first.items();
    if xs.iter().any(|x| x.items() != items) {
        return domain("pspan inputs are over different item sets");
    }
    let mut cur: Vec<PartialRanking> = xs.to_vec();
    cur.sort();
    cur.dedup();
    let iv = items.to_vec();
    while cur.len() > 1 {
        let mut found = None;
        'search: for other in &cur[1..] {
            for (ix, &x) in iv.iter().enumerate() {
                for &y in &iv[ix + 1..] {
                    if cur[0].compare_items(x, y) != other.compare_items(x, y) {
                        found = Some((x, y));
                        break 'search;
                    }
                }
            }
        }
        // Distinct partial rankings over one item set always differ on some pair.
        let (x, y) = found.expect("distinct partial rankings agree on every pair");
        cur = cur
            .into_iter()
            .map(|pr| {
                let (bx, by) = (pr.block_of(x).unwrap(), pr.block_of(y).unwrap());
                if bx == by {
                    pr
                } else {
                    pr.merge_blocks(bx.min(by), bx.max(by))
                }
            })
            .collect();
        cur.sort();
        cur.dedup();
    }
    Ok(cur.pop().unwrap())
}

/// `pspan` of a set of full rankings.
pub fn pspan_rankings(xs: &[Ranking]) -> Result<PartialRanking> {
    let prs: Vec<PartialRanking> = xs.iter().map(PartialRanking::from_ranking).collect();
    pspan(&prs)
}

/// Least common coarsening of two partial rankings.
pub fn sup(x: &PartialRanking, y: &PartialRanking) -> Result<PartialRanking> {
    if x.items() != y.items() {
        return domain("sup of partial rankings over different item sets");
    }
    pspan(&[x.clone(), y.clone()])
}

/// One row of the subset census.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusRow {
    /// Bitmask over dense ranking indices.
    pub id: u64,
    pub cardinality: usize,
    pub is_partial_ranking: bool,
    pub is_completely_decomposable: bool,
}

/// Exhaustive classification of every nonempty subset of rankings over at
/// most three items.
#[derive(Clone, Debug)]
pub struct Census {
    items: ItemSet,
    rows: Vec<CensusRow>,
}

impl Census {
    pub fn new(items: ItemSet, tol: f64, exec: Exec) -> Result<Self> {
        if items.len() > RSPAN_CAP {
            return Err(Error::Capacity {
                what: "exhaustive subset census item count".into(),
                size: items.len() as u128,
                cap: RSPAN_CAP as u128,
            });
        }
        if items.is_empty() {
            return domain("census over an empty item set");
        }
        let total = crate::perm::factorial(items.len()) as usize;
        let partial: HashSet<u64> = enumerate_partial_rankings(items)
            .iter()
            .map(|pr| mask_of(&SubsetObservation::from_partial(pr).unwrap()))
            .collect();
        let ids: Vec<u64> = (1u64..(1u64 << total)).collect();
        let classified = exec.map(&ids, |&id| {
            let obs = subset_from_mask(items, id);
            obs.is_completely_decomposable(tol)
        });
        let mut rows = Vec::with_capacity(ids.len());
        for (id, cd) in ids.into_iter().zip(classified) {
            rows.push(CensusRow {
                id,
                cardinality: id.count_ones() as usize,
                is_partial_ranking: partial.contains(&id),
                is_completely_decomposable: cd?,
            });
        }
        Ok(Census { items, rows })
    }

    pub fn items(&self) -> ItemSet {
        self.items
    }

    pub fn rows(&self) -> &[CensusRow] {
        &self.rows
    }

    pub fn decomposable_count(&self) -> usize {
        self.rows.iter().filter(|r| r.is_completely_decomposable).count()
    }

    /// Whether the decomposable subsets are exactly the partial rankings.
    pub fn classes_agree(&self) -> bool {
        self.rows.iter().all(|r| r.is_partial_ranking == r.is_completely_decomposable)
    }

    /// Intersection of every completely decomposable superset of `x`.
    pub fn rspan(&self, x: &SubsetObservation) -> Result<SubsetObservation> {
        if x.items() != self.items {
            return domain("rspan input is over a different item set than the census");
        }
        let want = mask_of(x);
        let span = self
            .rows
            .iter()
            .filter(|r| r.is_completely_decomposable && r.id & want == want)
            .fold(u64::MAX, |acc, r| acc & r.id);
        Ok(subset_from_mask(self.items, span))
    }

    /// Delimiter-separated report: id, cardinality, partial ranking flag,
    /// decomposability flag.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("subset_id\tcardinality\tis_partial_ranking\tis_completely_decomposable\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                r.id, r.cardinality, r.is_partial_ranking, r.is_completely_decomposable
            ));
        }
        s
    }
}

fn mask_of(x: &SubsetObservation) -> u64 {
    x.indices().iter().fold(0u64, |acc, &i| acc | (1u64 << i))
}

fn subset_from_mask(items: ItemSet, mask: u64) -> SubsetObservation {
    let members = (0..64).filter(|i| mask & (1u64 << i) != 0).collect();
    SubsetObservation::from_indices(items, members).unwrap()
}

/// Intersection of every completely decomposable superset of `x`, found by
/// classifying all nonempty subsets. Refuses more than three items.
pub fn rspan(x: &SubsetObservation) -> Result<SubsetObservation> {
    Census::new(x.items(), DEFAULT_TOLERANCE, Exec::default())?.rspan(x)
}

/// Mallows distribution `∝ φ^(−d(σ, σ0))` over the items of `sigma0`.
pub fn mallows_dense(sigma0: &Ranking, phi: f64) -> Result<DenseDistribution> {
    mallows_dense_with(sigma0, phi, DEFAULT_DENSE_CAP)
}

pub fn mallows_dense_with(sigma0: &Ranking, phi: f64, cap: usize) -> Result<DenseDistribution> {
    if !(phi.is_finite() && phi > 0.0) {
        return domain(format!("Mallows dispersion {phi} must be positive"));
    }
    if sigma0.is_empty() {
        return domain("Mallows centre must not be empty");
    }
    DenseDistribution::from_fn(sigma0.items(), cap, Exec::default(), |s| {
        phi.powi(-(kendall_tau(s, sigma0).unwrap() as i32))
    })?
    .normalized()
}
