//! Rankings, partial rankings, interleavings and the consistency tests
//! between them.
//!
//! Rankings are stored best to worst (`order[0]` is ranked first). Ranks are
//! 1-based wherever they cross the public surface.

use std::fmt;
use std::ops::RangeInclusive;

use crate::error::{domain, Result};
use crate::items::{ItemSet, ItemUniverse};

/// A total order over an item set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ranking {
    order: Vec<usize>,
}

impl Ranking {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = ItemSet::EMPTY;
        for &i in &order {
            if i >= crate::items::MAX_ITEMS || !seen.insert(i) {
                return domain(format!("item {i} repeated or out of range in ranking"));
            }
        }
        Ok(Ranking { order })
    }

    pub(crate) fn from_order_unchecked(order: Vec<usize>) -> Self {
        Ranking { order }
    }

    /// The ranking `0|1|..|n-1`.
    pub fn identity(n: usize) -> Self {
        Ranking { order: (0..n).collect() }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn items(&self) -> ItemSet {
        self.order.iter().copied().collect()
    }

    /// 1-based rank of `item`.
    pub fn rank_of(&self, item: usize) -> Option<usize> {
        self.order.iter().position(|&x| x == item).map(|p| p + 1)
    }

    /// Item at 1-based rank `rank`.
    pub fn item_at(&self, rank: usize) -> Option<usize> {
        rank.checked_sub(1).and_then(|r| self.order.get(r).copied())
    }
}

/// Which side of a binary partition occupies a rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    A,
    B,
}

/// The binary pattern of A and B occupancy over consecutive ranks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interleaving {
    pattern: Vec<Side>,
}

impl Interleaving {
    pub fn new(pattern: Vec<Side>) -> Self {
        Interleaving { pattern }
    }

    pub fn pattern(&self) -> &[Side] {
        &self.pattern
    }

    /// `(#A, #B)`.
    pub fn counts(&self) -> (usize, usize) {
        let a = self.pattern.iter().filter(|s| **s == Side::A).count();
        (a, self.pattern.len() - a)
    }

    pub(crate) fn from_bits(bits: &[bool]) -> Self {
        Interleaving { pattern: bits.iter().map(|&b| if b { Side::B } else { Side::A }).collect() }
    }

    pub(crate) fn to_bits(&self) -> Vec<bool> {
        self.pattern.iter().map(|s| *s == Side::B).collect()
    }

    /// Lexicographic index among all interleavings with the same counts.
    pub fn index(&self) -> usize {
        crate::perm::pattern_rank(&self.to_bits())
    }

    pub fn from_index(index: usize, a: usize, b: usize) -> Self {
        Self::from_bits(&crate::perm::pattern_unrank(index, a, b))
    }

    /// Renders with custom symbols, e.g. `D|E|E|D`.
    pub fn render_with(&self, a: &str, b: &str) -> String {
        self.pattern.iter().map(|s| if *s == Side::A { a } else { b }).collect::<Vec<_>>().join("|")
    }
}

impl fmt::Display for Interleaving {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with("A", "B"))
    }
}

/// An ordered partition `Ω_1|..|Ω_r` of an item set into nonempty tied blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialRanking {
    blocks: Vec<ItemSet>,
}

impl PartialRanking {
    pub fn new(blocks: Vec<ItemSet>) -> Result<Self> {
        let mut seen = ItemSet::EMPTY;
        for b in &blocks {
            if b.is_empty() {
                return domain("partial ranking has an empty block");
            }
            if !b.is_disjoint(seen) {
                return domain("partial ranking blocks overlap");
            }
            seen = seen.union(*b);
        }
        if blocks.is_empty() {
            return domain("partial ranking has no blocks");
        }
        Ok(PartialRanking { blocks })
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<ItemSet>) -> Self {
        PartialRanking { blocks }
    }

    /// The full ranking `σ` as all-singleton blocks.
    pub fn from_ranking(sigma: &Ranking) -> Self {
        PartialRanking { blocks: sigma.order.iter().map(|&i| ItemSet::singleton(i)).collect() }
    }

    /// The trivial observation: one block holding every item.
    pub fn trivial(items: ItemSet) -> Result<Self> {
        Self::new(vec![items])
    }

    /// Top-k observation: the listed items first, everything else tied behind.
    pub fn top_k(prefix: &[usize], items: ItemSet) -> Result<Self> {
        let mut blocks: Vec<ItemSet> = prefix.iter().map(|&i| ItemSet::singleton(i)).collect();
        let named: ItemSet = prefix.iter().copied().collect();
        if !named.is_subset(items) {
            return domain("top-k prefix names items outside the universe");
        }
        let rest = items.difference(named);
        if !rest.is_empty() {
            blocks.push(rest);
        }
        Self::new(blocks)
    }

    pub fn blocks(&self) -> &[ItemSet] {
        &self.blocks
    }

    pub fn items(&self) -> ItemSet {
        self.blocks.iter().fold(ItemSet::EMPTY, |acc, b| acc.union(*b))
    }

    pub fn len(&self) -> usize {
        self.items().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The type `γ = (|Ω_1|, .., |Ω_r|)`.
    pub fn gamma(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn is_full(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }

    pub fn is_trivial(&self) -> bool {
        self.blocks.len() == 1
    }

    /// `|S_γπ| = Π γ_i!` as a float (exact up to 2^53).
    pub fn cardinality(&self) -> f64 {
        self.blocks.iter().map(|b| crate::perm::factorial_f64(b.len())).product()
    }

    /// The full ranking when every block is a singleton.
    pub fn as_ranking(&self) -> Option<Ranking> {
        self.is_full().then(|| Ranking { order: self.blocks.iter().map(|b| b.min_item().unwrap()).collect() })
    }

    /// Block index holding `item`.
    pub fn block_of(&self, item: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(item))
    }

    /// Merges blocks `first..=last` into one (deletes the bars between them).
    pub fn merge_blocks(&self, first: usize, last: usize) -> Self {
        assert!(first <= last && last < self.blocks.len());
        let mut blocks = Vec::with_capacity(self.blocks.len() - (last - first));
        blocks.extend_from_slice(&self.blocks[..first]);
        blocks.push(self.blocks[first..=last].iter().fold(ItemSet::EMPTY, |acc, b| acc.union(*b)));
        blocks.extend_from_slice(&self.blocks[last + 1..]);
        PartialRanking { blocks }
    }

    /// Pairwise relation of two items: `Less` when `x` is strictly ahead.
    pub fn compare_items(&self, x: usize, y: usize) -> Option<std::cmp::Ordering> {
        Some(self.block_of(x)?.cmp(&self.block_of(y)?))
    }

    /// Every full ranking in the partial ranking, in lexicographic order of
    /// the per-block arrangements. Intended for small oracles.
    pub fn members(&self) -> Vec<Ranking> {
        let mut out = vec![Vec::with_capacity(self.len())];
        for b in &self.blocks {
            let items = b.to_vec();
            let mut perms = Vec::new();
            let mut idx: Vec<usize> = (0..items.len()).collect();
            loop {
                perms.push(idx.iter().map(|&i| items[i]).collect::<Vec<_>>());
                if !crate::perm::next_permutation(&mut idx) {
                    break;
                }
            }
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    perms.iter().map(move |p| {
                        let mut v = prefix.clone();
                        v.extend_from_slice(p);
                        v
                    })
                })
                .collect();
        }
        out.into_iter().map(|order| Ranking { order }).collect()
    }
}

fn check_subset(a: ItemSet, of: ItemSet, what: &str) -> Result<()> {
    if !a.is_subset(of) {
        return domain(format!("{what} contains items outside the universe"));
    }
    Ok(())
}

/// `φ_A(σ)`: the order `σ` induces on `a`.
pub fn relative_ranking(sigma: &Ranking, a: ItemSet) -> Result<Ranking> {
    check_subset(a, sigma.items(), "subset")?;
    Ok(Ranking { order: sigma.order.iter().copied().filter(|&i| a.contains(i)).collect() })
}

fn check_partition(a: ItemSet, b: ItemSet, universe: ItemSet) -> Result<()> {
    if !a.is_disjoint(b) || a.union(b) != universe {
        return domain("(A, B) is not a partition of the universe");
    }
    Ok(())
}

/// `τ_AB(σ)`: which side occupies each rank.
pub fn interleaving_of(sigma: &Ranking, a: ItemSet, b: ItemSet) -> Result<Interleaving> {
    check_partition(a, b, sigma.items())?;
    Ok(Interleaving { pattern: sigma.order.iter().map(|&i| if a.contains(i) { Side::A } else { Side::B }).collect() })
}

/// Pieces a full ranking together from an interleaving and two relative
/// rankings. Inverse of `(interleaving_of, relative_ranking, relative_ranking)`.
pub fn join(tau: &Interleaving, pi_a: &Ranking, pi_b: &Ranking) -> Result<Ranking> {
    if tau.counts() != (pi_a.len(), pi_b.len()) {
        return domain(format!(
            "interleaving counts {:?} do not match relative ranking sizes ({}, {})",
            tau.counts(),
            pi_a.len(),
            pi_b.len()
        ));
    }
    if !pi_a.items().is_disjoint(pi_b.items()) {
        return domain("relative rankings share items");
    }
    Ok(join_unchecked(&tau.to_bits(), &pi_a.order, &pi_b.order))
}

pub(crate) fn join_unchecked(bits: &[bool], a: &[usize], b: &[usize]) -> Ranking {
    let (mut ia, mut ib) = (a.iter(), b.iter());
    Ranking { order: bits.iter().map(|&is_b| if is_b { *ib.next().unwrap() } else { *ia.next().unwrap() }).collect() }
}

/// 1-based rank ranges occupied by each block of a partial ranking of type `γ`.
pub fn rank_sets(gamma: &[usize]) -> Vec<RangeInclusive<usize>> {
    let mut start = 1;
    gamma
        .iter()
        .map(|&g| {
            let r = start..=start + g - 1;
            start += g;
            r
        })
        .collect()
}

/// Whether `σ ∈ S_γπ`: each block occupies exactly its rank set.
pub fn contains(obs: &PartialRanking, sigma: &Ranking) -> Result<bool> {
    if obs.items() != sigma.items() {
        return domain("partial ranking and ranking are over different item sets");
    }
    let mut pos = 0;
    for b in &obs.blocks {
        let occupied: ItemSet = sigma.order[pos..pos + b.len()].iter().copied().collect();
        if occupied != *b {
            return Ok(false);
        }
        pos += b.len();
    }
    Ok(true)
}

/// `[S_γπ]_A`: intersect each block with `a`, dropping empty intersections.
pub fn restrict(obs: &PartialRanking, a: ItemSet) -> Result<PartialRanking> {
    if a.is_empty() {
        return domain("cannot restrict to an empty item set");
    }
    check_subset(a, obs.items(), "restriction set")?;
    Ok(restrict_unchecked(obs, a))
}

pub(crate) fn restrict_unchecked(obs: &PartialRanking, a: ItemSet) -> PartialRanking {
    PartialRanking { blocks: obs.blocks.iter().map(|b| b.intersection(a)).filter(|b| !b.is_empty()).collect() }
}

/// Whether `τ ∈ [S_γπ]_AB`: every block's rank segment holds as many As as
/// the block has A-items.
pub fn consistent_interleaving(tau: &Interleaving, obs: &PartialRanking, a: ItemSet, b: ItemSet) -> Result<bool> {
    check_partition(a, b, obs.items())?;
    if tau.counts() != (a.len(), b.len()) {
        return domain("interleaving counts do not match the partition");
    }
    let mut pos = 0;
    for blk in &obs.blocks {
        let want = blk.intersection(a).len();
        let got = tau.pattern[pos..pos + blk.len()].iter().filter(|s| **s == Side::A).count();
        if want != got {
            return Ok(false);
        }
        pos += blk.len();
    }
    Ok(true)
}

/// Kendall's tau distance: number of discordant item pairs.
pub fn kendall_tau(s1: &Ranking, s2: &Ranking) -> Result<usize> {
    if s1.items() != s2.items() {
        return domain("rankings are over different item sets");
    }
    let mut rank2 = [0usize; crate::items::MAX_ITEMS];
    for (r, &i) in s2.order.iter().enumerate() {
        rank2[i] = r;
    }
    let seq: Vec<usize> = s1.order.iter().map(|&i| rank2[i]).collect();
    let mut d = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                d += 1;
            }
        }
    }
    Ok(d)
}

// Text grammar shared with the ballot format: `a|b|c` for rankings and
// `a,b|c` for partial rankings; whitespace is insignificant.
impl ItemUniverse {
    pub fn render_ranking(&self, sigma: &Ranking) -> String {
        sigma.order.iter().map(|&i| self.label(i)).collect::<Vec<_>>().join("|")
    }

    pub fn render_partial(&self, obs: &PartialRanking) -> String {
        obs.blocks
            .iter()
            .map(|b| b.iter().map(|i| self.label(i)).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Parses blocks as written, checking labels and duplicates, without
    /// requiring the blocks to cover the universe.
    pub fn parse_blocks(&self, text: &str) -> Result<Vec<ItemSet>> {
        let mut seen = ItemSet::EMPTY;
        let mut blocks = Vec::new();
        for raw in text.split('|') {
            let mut block = ItemSet::EMPTY;
            for tok in raw.split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    return domain(format!("empty block or item in {text:?}"));
                }
                let Some(i) = self.index_of(tok) else {
                    return domain(format!("unknown item {tok:?}"));
                };
                if !seen.insert(i) {
                    return domain(format!("duplicate item {tok:?}"));
                }
                block.insert(i);
            }
            blocks.push(block);
        }
        Ok(blocks)
    }

    /// Parses a partial ranking whose blocks must cover the universe.
    pub fn parse_partial(&self, text: &str) -> Result<PartialRanking> {
        let blocks = self.parse_blocks(text)?;
        let pr = PartialRanking::new(blocks)?;
        if pr.items() != self.all() {
            return domain(format!("{text:?} does not mention every item"));
        }
        Ok(pr)
    }

    /// Parses an observation, completing a strict subset top-k style: the
    /// unnamed items form a final tied block.
    pub fn parse_observation(&self, text: &str) -> Result<PartialRanking> {
        let mut blocks = self.parse_blocks(text)?;
        let named = blocks.iter().fold(ItemSet::EMPTY, |acc, b| acc.union(*b));
        let rest = self.all().difference(named);
        if !rest.is_empty() {
            blocks.push(rest);
        }
        PartialRanking::new(blocks)
    }

    /// Parses a full ranking over the whole universe.
    pub fn parse_ranking(&self, text: &str) -> Result<Ranking> {
        let pr = self.parse_partial(text)?;
        pr.as_ranking().ok_or_else(|| crate::Error::Domain(format!("{text:?} is not a full ranking")))
    }
}
