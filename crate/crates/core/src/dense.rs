//! Explicit probability tables over every ranking of a small item set.
//! This is the brute-force ground truth the factored code is checked
//! against.

use crate::error::{domain, Error, Result};
use crate::exec::Exec;
use crate::items::ItemSet;
use crate::perm::{factorial, lex_rank, lex_unrank, next_permutation, pattern_rank};
use crate::ranking::Ranking;

/// Default largest item count for densification.
pub const DEFAULT_DENSE_CAP: usize = 8;

/// A table over all rankings of `items`, indexed by the lexicographic rank of
/// the best-to-worst sequence of local positions (items sorted ascending).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseDistribution {
    items: Vec<usize>,
    probs: Vec<f64>,
}

pub(crate) fn check_dense_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::Capacity {
            what: "dense distribution item count".into(),
            size: n as u128,
            cap: cap as u128,
        });
    }
    Ok(())
}

impl DenseDistribution {
    pub fn new(items: ItemSet, probs: Vec<f64>) -> Result<Self> {
        check_dense_cap(items.len(), crate::perm::MAX_FACTORIAL)?;
        if probs.len() as u64 != factorial(items.len()) {
            return domain(format!("dense table has {} entries, expected {}", probs.len(), factorial(items.len())));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return domain("dense table has a negative or non-finite entry");
        }
        Ok(DenseDistribution { items: items.to_vec(), probs })
    }

    /// Evaluates `f` at every ranking of `items`.
    pub fn from_fn<F>(items: ItemSet, cap: usize, exec: Exec, f: F) -> Result<Self>
    where
        F: Fn(&Ranking) -> f64 + Sync + Send,
    {
        check_dense_cap(items.len(), cap)?;
        let v = items.to_vec();
        let m = v.len();
        let total = factorial(m) as usize;
        let chunk = (total / 64).max(64).min(total);
        let chunks = total.div_ceil(chunk);
        let parts = exec.map_range(chunks, |c| {
            let start = c * chunk;
            let end = (start + chunk).min(total);
            let mut seq = lex_unrank(start, m);
            let mut out = Vec::with_capacity(end - start);
            for _ in start..end {
                let s = Ranking::from_order_unchecked(seq.iter().map(|&i| v[i]).collect());
                out.push(f(&s));
                next_permutation(&mut seq);
            }
            out
        });
        Ok(DenseDistribution { items: v, probs: parts.concat() })
    }

    pub fn uniform(items: ItemSet) -> Result<Self> {
        check_dense_cap(items.len(), crate::perm::MAX_FACTORIAL)?;
        let k = factorial(items.len()) as usize;
        Ok(DenseDistribution { items: items.to_vec(), probs: vec![1.0 / k as f64; k] })
    }

    pub fn point_mass(sigma: &Ranking) -> Result<Self> {
        let mut d = Self::new(sigma.items(), vec![0.0; factorial(sigma.len()) as usize])?;
        let i = d.index_of(sigma)?;
        d.probs[i] = 1.0;
        Ok(d)
    }

    pub fn items(&self) -> ItemSet {
        self.items.iter().copied().collect()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn local(&self, item: usize) -> Option<usize> {
        self.items.binary_search(&item).ok()
    }

    pub fn index_of(&self, sigma: &Ranking) -> Result<usize> {
        if sigma.items() != self.items() {
            return domain("ranking is over a different item set than the distribution");
        }
        let seq: Vec<usize> = sigma.order().iter().map(|&i| self.local(i).unwrap()).collect();
        Ok(lex_rank(&seq))
    }

    pub fn ranking_at(&self, index: usize) -> Ranking {
        let seq = lex_unrank(index, self.items.len());
        Ranking::from_order_unchecked(seq.iter().map(|&i| self.items[i]).collect())
    }

    pub fn get(&self, sigma: &Ranking) -> Result<f64> {
        Ok(self.probs[self.index_of(sigma)?])
    }

    /// Every ranking paired with its weight, in index order.
    pub fn iter(&self) -> impl Iterator<Item = (Ranking, f64)> + '_ {
        let m = self.items.len();
        let mut seq: Vec<usize> = (0..m).collect();
        let mut first = true;
        self.probs.iter().map(move |&p| {
            if !first {
                next_permutation(&mut seq);
            }
            first = false;
            (Ranking::from_order_unchecked(seq.iter().map(|&i| self.items[i]).collect()), p)
        })
    }

    pub fn normalized(&self) -> Result<Self> {
        let z = self.total();
        if z.is_nan() || z <= 0.0 {
            return domain("distribution has zero total mass");
        }
        Ok(DenseDistribution { items: self.items.clone(), probs: self.probs.iter().map(|p| p / z).collect() })
    }

    /// Pointwise product with a likelihood, renormalized (Bayes rule).
    pub fn reweight<F: Fn(&Ranking) -> f64>(&self, likelihood: F) -> Result<Self> {
        let probs = self.iter().map(|(s, p)| p * likelihood(&s)).collect();
        DenseDistribution { items: self.items.clone(), probs }.normalized()
    }

    /// Marginal of the relative ranking of `sub`.
    pub fn relative_marginal(&self, sub: ItemSet) -> Result<Self> {
        if sub.is_empty() || !sub.is_subset(self.items()) {
            return domain("marginal subset must be a nonempty subset of the items");
        }
        let sv = sub.to_vec();
        let mut out = vec![0.0; factorial(sv.len()) as usize];
        let mut local = vec![0usize; sv.len()];
        for (s, p) in self.iter() {
            if p == 0.0 {
                continue;
            }
            let mut k = 0;
            for &i in s.order() {
                if sub.contains(i) {
                    local[k] = sv.binary_search(&i).unwrap();
                    k += 1;
                }
            }
            out[lex_rank(&local)] += p;
        }
        Ok(DenseDistribution { items: sv, probs: out })
    }

    /// Marginal over interleavings of `a` vs the remaining items, indexed by
    /// lexicographic pattern rank.
    pub fn interleaving_marginal(&self, a: ItemSet) -> Vec<f64> {
        let n = self.items.len();
        let mut out = vec![0.0; crate::perm::binomial(n, a.len()) as usize];
        let mut bits = vec![false; n];
        for (s, p) in self.iter() {
            if p == 0.0 {
                continue;
            }
            for (k, &i) in s.order().iter().enumerate() {
                bits[k] = !a.contains(i);
            }
            out[pattern_rank(&bits)] += p;
        }
        out
    }

    /// Total variation distance.
    pub fn tv_distance(&self, other: &Self) -> Result<f64> {
        if self.items != other.items {
            return domain("distributions over different item sets");
        }
        Ok(0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }

    /// `KL(self ‖ other)` in nats; infinite when `other` misses support.
    pub fn kl_divergence(&self, other: &Self) -> Result<f64> {
        if self.items != other.items {
            return domain("distributions over different item sets");
        }
        let mut kl = 0.0;
        for (p, q) in self.probs.iter().zip(&other.probs) {
            if *p > 0.0 {
                if *q <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                kl += p * (p / q).ln();
            }
        }
        Ok(kl)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_fn_matches_sequential_enumeration() {
        let items = ItemSet::from_iter([1, 4, 6, 7, 9]);
        let f = |s: &Ranking| s.order().iter().enumerate().map(|(k, &i)| (k * i) as f64).sum::<f64>();
        let a = DenseDistribution::from_fn(items, 8, Exec::Sequential, f).unwrap();
        let b = DenseDistribution::from_fn(items, 8, Exec::Parallel, f).unwrap();
        assert_eq!(a, b);
        for (idx, (s, p)) in a.iter().enumerate() {
            assert_eq!(a.index_of(&s).unwrap(), idx);
            assert_eq!(a.ranking_at(idx), s);
            assert_eq!(p, f(&s));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let r = DenseDistribution::from_fn(ItemSet::full(9), 8, Exec::Sequential, |_| 1.0);
        assert!(matches!(r, Err(Error::Capacity { .. })));
    }

    #[test]
    fn uniform_marginals_are_uniform() {
        let d = DenseDistribution::uniform(ItemSet::full(4)).unwrap();
        let m = d.relative_marginal(ItemSet::from_iter([0, 2])).unwrap();
        assert!(m.probs().iter().all(|p| (p - 0.5).abs() < 1e-15));
        let il = d.interleaving_marginal(ItemSet::from_iter([0, 2]));
        assert!(il.iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-15));
    }
}
