//! Binary hierarchies of riffle independent splits.

use std::fmt;

use crate::error::{domain, Error, Result};
use crate::items::{ItemSet, ItemUniverse};
use crate::perm::{binomial, factorial_f64};
use crate::ranking::Ranking;

/// Default cap on the number of entries in a single parameter table.
pub const DEFAULT_MAX_TABLE_ENTRIES: u128 = 1_000_000;

/// A leaf over an item set, or a split of an item set into two
/// nonempty disjoint halves, each carrying its own sub-hierarchy.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Hierarchy {
    Leaf(ItemSet),
    Split { items: ItemSet, left: Box<Hierarchy>, right: Box<Hierarchy> },
}

impl Hierarchy {
    pub fn leaf(items: ItemSet) -> Result<Self> {
        if items.is_empty() {
            return domain("hierarchy leaf must not be empty");
        }
        Ok(Hierarchy::Leaf(items))
    }

    pub fn split(left: Hierarchy, right: Hierarchy) -> Result<Self> {
        if !left.items().is_disjoint(right.items()) {
            return domain("hierarchy split halves overlap");
        }
        Ok(Hierarchy::Split { items: left.items().union(right.items()), left: Box::new(left), right: Box::new(right) })
    }

    /// Split with singleton/leaf shorthand: `split_sets(A, B)` has two leaves.
    pub fn split_sets(a: ItemSet, b: ItemSet) -> Result<Self> {
        Self::split(Self::leaf(a)?, Self::leaf(b)?)
    }

    /// Peels one item per level in the given order: `({σ0(1)}, rest)`
    /// recursively, ending in a singleton leaf.
    pub fn chain(order: &Ranking) -> Result<Self> {
        let items = order.order();
        if items.is_empty() {
            return domain("chain over an empty ranking");
        }
        let mut h = Hierarchy::Leaf(ItemSet::singleton(items[items.len() - 1]));
        for &i in items[..items.len() - 1].iter().rev() {
            h = Self::split(Hierarchy::Leaf(ItemSet::singleton(i)), h)?;
        }
        Ok(h)
    }

    pub fn items(&self) -> ItemSet {
        match self {
            Hierarchy::Leaf(s) => *s,
            Hierarchy::Split { items, .. } => *items,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Hierarchy::Leaf(_))
    }

    /// Nodes in pre-order, left child first.
    pub fn preorder(&self) -> Vec<&Hierarchy> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(h) = stack.pop() {
            out.push(h);
            if let Hierarchy::Split { left, right, .. } = h {
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }

    pub fn leaves(&self) -> Vec<ItemSet> {
        self.preorder()
            .into_iter()
            .filter_map(|h| match h {
                Hierarchy::Leaf(s) => Some(*s),
                _ => None,
            })
            .collect()
    }

    pub fn internal_count(&self) -> usize {
        self.preorder().iter().filter(|h| !h.is_leaf()).count()
    }

    /// Size of this node's own parameter table.
    pub fn node_table_len(&self) -> u128 {
        match self {
            Hierarchy::Leaf(s) => factorial_f64(s.len()) as u128,
            Hierarchy::Split { items, left, .. } => binomial(items.len(), left.items().len()) as u128,
        }
    }

    /// Σ over nodes of (table size − 1).
    pub fn free_param_count(&self) -> u128 {
        self.preorder().iter().map(|h| h.node_table_len() - 1).sum()
    }

    /// Σ over nodes of table size.
    pub fn table_entries(&self) -> u128 {
        self.preorder().iter().map(|h| h.node_table_len()).sum()
    }

    /// Rejects hierarchies with a node table larger than `cap` entries.
    pub fn check_table_cap(&self, cap: u128) -> Result<()> {
        for h in self.preorder() {
            let size = match h {
                Hierarchy::Leaf(s) if s.len() > crate::perm::MAX_FACTORIAL => u128::MAX,
                _ => h.node_table_len(),
            };
            if size > cap {
                return Err(Error::Capacity { what: format!("table of node over {:?}", h.items()), size, cap });
            }
        }
        Ok(())
    }

    /// Orders every split so the half holding the smallest item is on the
    /// left. Two hierarchies describe the same family iff their canonical
    /// forms are equal.
    pub fn canonical(&self) -> Hierarchy {
        match self {
            Hierarchy::Leaf(s) => Hierarchy::Leaf(*s),
            Hierarchy::Split { items, left, right } => {
                let (l, r) = (left.canonical(), right.canonical());
                let (l, r) = if l.items().min_item() < r.items().min_item() { (l, r) } else { (r, l) };
                Hierarchy::Split { items: *items, left: Box::new(l), right: Box::new(r) }
            }
        }
    }

    /// Canonical serialization over item ids, e.g. `(({0,2} {3,4}) {1})`.
    pub fn fingerprint(&self) -> String {
        fn go(h: &Hierarchy, out: &mut String) {
            match h {
                Hierarchy::Leaf(s) => {
                    out.push('{');
                    out.push_str(&s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","));
                    out.push('}');
                }
                Hierarchy::Split { left, right, .. } => {
                    out.push('(');
                    go(left, out);
                    out.push(' ');
                    go(right, out);
                    out.push(')');
                }
            }
        }
        let mut s = String::new();
        go(&self.canonical(), &mut s);
        s
    }

    /// Same rendering with labels.
    pub fn render(&self, universe: &ItemUniverse) -> String {
        match self {
            Hierarchy::Leaf(s) => format!("{{{}}}", s.iter().map(|i| universe.label(i)).collect::<Vec<_>>().join(",")),
            Hierarchy::Split { left, right, .. } => {
                format!("({} {})", left.render(universe), right.render(universe))
            }
        }
    }

    /// The leaf partition, sorted, for structure comparisons.
    pub fn leaf_partition(&self) -> Vec<ItemSet> {
        let mut l = self.leaves();
        l.sort();
        l
    }
}

impl fmt::Debug for Hierarchy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fingerprint_raw())
    }
}

impl Hierarchy {
    fn fingerprint_raw(&self) -> String {
        match self {
            Hierarchy::Leaf(s) => format!("{:?}", s),
            Hierarchy::Split { left, right, .. } => {
                format!("({:?} {:?})", left, right)
            }
        }
    }
}

/// Every full binary hierarchy (singleton leaves) over `items`, each split
/// listed once up to swapping its halves.
pub fn all_full_hierarchies(items: ItemSet) -> Vec<Hierarchy> {
    if items.len() <= 1 {
        return vec![Hierarchy::Leaf(items)];
    }
    let mut out = Vec::new();
    for (a, b) in bipartitions(items) {
        let la = all_full_hierarchies(a);
        let lb = all_full_hierarchies(b);
        for ha in &la {
            for hb in &lb {
                out.push(Hierarchy::split(ha.clone(), hb.clone()).unwrap());
            }
        }
    }
    out
}

/// All unordered bipartitions `(A, B)` of `items` into nonempty halves,
/// with `A` holding the smallest item.
pub fn bipartitions(items: ItemSet) -> Vec<(ItemSet, ItemSet)> {
    let v = items.to_vec();
    let k = v.len();
    if k < 2 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity((1usize << (k - 1)) - 1);
    // The smallest item is always in A; enumerate the rest as a bitmask.
    for mask in 0..(1u64 << (k - 1)) - 1 {
        let mut a = ItemSet::singleton(v[0]);
        for (j, &item) in v[1..].iter().enumerate() {
            if mask & (1 << j) != 0 {
                a.insert(item);
            }
        }
        out.push((a, items.difference(a)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn apa() -> Hierarchy {
        // ((1,3) vs (4,5)) vs 2, items 0-based.
        let d = ItemSet::from_iter([0, 2]);
        let e = ItemSet::from_iter([3, 4]);
        let de = Hierarchy::split_sets(d, e).unwrap();
        Hierarchy::split(de, Hierarchy::Leaf(ItemSet::singleton(1))).unwrap()
    }

    #[test]
    fn apa_has_eleven_free_parameters() {
        assert_eq!(apa().free_param_count(), 11);
        assert_eq!(apa().table_entries(), 16);
    }

    #[test]
    fn single_leaf_and_chain_counts() {
        let h = Hierarchy::leaf(ItemSet::full(5)).unwrap();
        assert_eq!(h.free_param_count(), 119);
        let c = Hierarchy::chain(&Ranking::identity(3)).unwrap();
        assert_eq!(c.free_param_count(), 3);
        assert_eq!(Hierarchy::chain(&Ranking::identity(7)).unwrap().internal_count(), 6);
        let two = Hierarchy::chain(&Ranking::identity(2)).unwrap();
        assert_eq!(two.leaves(), vec![ItemSet::singleton(0), ItemSet::singleton(1)]);
    }

    #[test]
    fn invalid_hierarchies_rejected() {
        assert!(Hierarchy::leaf(ItemSet::EMPTY).is_err());
        let a = ItemSet::from_iter([0, 1]);
        assert!(Hierarchy::split_sets(a, ItemSet::singleton(1)).is_err());
    }

    #[test]
    fn table_cap_enforced() {
        let h = Hierarchy::leaf(ItemSet::full(10)).unwrap();
        assert!(matches!(h.check_table_cap(DEFAULT_MAX_TABLE_ENTRIES), Err(Error::Capacity { .. })));
        assert!(Hierarchy::leaf(ItemSet::full(9)).unwrap().check_table_cap(DEFAULT_MAX_TABLE_ENTRIES).is_ok());
    }

    #[test]
    fn full_hierarchy_counts_are_double_factorials() {
        // (2n-3)!! rooted binary trees with n labelled leaves.
        for (n, want) in [(1, 1), (2, 1), (3, 3), (4, 15), (5, 105)] {
            assert_eq!(all_full_hierarchies(ItemSet::full(n)).len(), want);
        }
    }

    #[test]
    fn canonical_forms_ignore_child_order() {
        let a = Hierarchy::split_sets(ItemSet::singleton(1), ItemSet::singleton(0)).unwrap();
        let b = Hierarchy::split_sets(ItemSet::singleton(0), ItemSet::singleton(1)).unwrap();
        assert_ne!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(apa().fingerprint(), "(({0,2} {3,4}) {1})");
    }
}
