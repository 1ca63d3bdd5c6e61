//! Item universes and bitmask item sets.

use std::collections::HashMap;
use std::fmt;

use crate::error::{domain, Result};

/// Largest universe an [`ItemSet`] can address.
pub const MAX_ITEMS: usize = 64;

/// A subset of a universe, stored as a bitmask over item identities.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemSet(u64);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ItemSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// The first `n` items, `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_ITEMS, "universe larger than {MAX_ITEMS} items");
        if n == MAX_ITEMS {
            ItemSet(u64::MAX)
        } else {
            ItemSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(item: usize) -> Self {
        assert!(item < MAX_ITEMS);
        ItemSet(1u64 << item)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, item: usize) -> bool {
        item < MAX_ITEMS && self.0 & (1u64 << item) != 0
    }

    pub fn insert(&mut self, item: usize) -> bool {
        let fresh = !self.contains(item);
        self.0 |= 1u64 << item;
        fresh
    }

    pub fn union(self, other: ItemSet) -> ItemSet {
        ItemSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ItemSet) -> ItemSet {
        ItemSet(self.0 & other.0)
    }

    pub fn difference(self, other: ItemSet) -> ItemSet {
        ItemSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: ItemSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: ItemSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn min_item(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Items in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Number of members strictly smaller than `item`.
    pub fn count_below(self, item: usize) -> usize {
        if item >= MAX_ITEMS {
            return self.len();
        }
        (self.0 & ((1u64 << item) - 1)).count_ones() as usize
    }
}

impl FromIterator<usize> for ItemSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = ItemSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// The declared set of items. Identity is the position in `labels`; labels
/// are for display and parsing only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItemUniverse {
    labels: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl ItemUniverse {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        if labels.is_empty() {
            return domain("item universe must not be empty");
        }
        if labels.len() > MAX_ITEMS {
            return domain(format!("item universe has {} items, at most {MAX_ITEMS} are supported", labels.len()));
        }
        let mut lookup = HashMap::with_capacity(labels.len());
        let mut owned = Vec::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            let l = l.as_ref().trim();
            if l.is_empty() || l.contains(['|', ',', ':', '#']) || l.chars().any(char::is_whitespace) {
                return domain(format!("invalid item label {l:?}"));
            }
            if lookup.insert(l.to_string(), i).is_some() {
                return domain(format!("duplicate item label {l:?}"));
            }
            owned.push(l.to_string());
        }
        Ok(ItemUniverse { labels: owned, lookup })
    }

    /// Universe labelled `1..=n`.
    pub fn numbered(n: usize) -> Result<Self> {
        let labels: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        Self::new(&labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, item: usize) -> &str {
        &self.labels[item]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.lookup.get(label).copied()
    }

    pub fn all(&self) -> ItemSet {
        ItemSet::full(self.len())
    }

    /// Resolves a list of labels to an item set.
    pub fn set_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<ItemSet> {
        let mut s = ItemSet::EMPTY;
        for l in labels {
            let l = l.as_ref();
            match self.index_of(l) {
                Some(i) => {
                    if !s.insert(i) {
                        return domain(format!("duplicate item {l:?}"));
                    }
                }
                None => return domain(format!("unknown item {l:?}")),
            }
        }
        Ok(s)
    }
}
