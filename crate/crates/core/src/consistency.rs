//! Enumeration of the table entries consistent with a partial ranking.
//!
//! For a node whose items are restricted to blocks `Ω_1|..|Ω_r`, a
//! consistent entry is a product of independent per-block choices, and its
//! table index is a sum of per-block offsets. Both enumerations below visit
//! only consistent entries, so the cost is proportional to their number
//! rather than to the table size times `n`.

use crate::items::ItemSet;
use crate::perm::{b_run, b_step, factorial};

/// Cartesian sum of per-block offset lists.
fn cartesian_sums(base: usize, lists: &[Vec<usize>], out: &mut Vec<usize>) {
    match lists.split_first() {
        None => out.push(base),
        Some((first, rest)) => {
            for &o in first {
                cartesian_sums(base + o, rest, out);
            }
        }
    }
}

fn combine(lists: Vec<Vec<usize>>) -> Vec<usize> {
    let mut base = 0;
    let mut multi = Vec::new();
    for l in lists {
        if l.len() == 1 {
            base += l[0];
        } else {
            multi.push(l);
        }
    }
    let total: usize = multi.iter().map(|l| l.len()).product();
    let mut out = Vec::with_capacity(total);
    cartesian_sums(base, &multi, &mut out);
    out
}

/// Offsets of every pattern with `want_a` As among `len` positions, given
/// `a`/`b` As and Bs remaining when the block starts.
fn block_patterns(len: usize, want_a: usize, a: usize, b: usize, acc: usize, out: &mut Vec<usize>) {
    if want_a == 0 {
        out.push(acc + b_run(a, b, len));
        return;
    }
    if want_a == len {
        out.push(acc);
        return;
    }
    // Place an A, then a B.
    block_patterns(len - 1, want_a - 1, a - 1, b, acc, out);
    block_patterns(len - 1, want_a, a, b - 1, acc + b_step(a, b), out);
}

/// Indices of interleavings of `left` vs the rest of the node consistent with
/// the restricted blocks (which must partition the node's items).
pub(crate) fn interleaving_indices(blocks: &[ItemSet], left: ItemSet) -> Vec<usize> {
    let mut a: usize = blocks.iter().map(|b| b.intersection(left).len()).sum();
    let mut b: usize = blocks.iter().map(|blk| blk.len()).sum::<usize>() - a;
    let mut lists = Vec::with_capacity(blocks.len());
    for blk in blocks {
        let ca = blk.intersection(left).len();
        let cb = blk.len() - ca;
        let mut l = Vec::new();
        block_patterns(blk.len(), ca, a, b, 0, &mut l);
        lists.push(l);
        a -= ca;
        b -= cb;
    }
    combine(lists)
}

fn block_arrangements(pool: &mut Vec<usize>, cross: &[usize], pos: usize, m: usize, acc: usize, out: &mut Vec<usize>) {
    if pool.is_empty() {
        out.push(acc);
        return;
    }
    let weight = factorial(m - 1 - pos) as usize;
    for k in 0..pool.len() {
        let x = pool.remove(k);
        // `pool` is sorted, so `k` unused block items are smaller than `x`.
        let digit = cross[x] + k;
        block_arrangements(pool, cross, pos + 1, m, acc + digit * weight, out);
        pool.insert(k, x);
    }
}

/// Indices of rankings of `leaf` (lexicographic over local positions)
/// contained in the restricted blocks.
pub(crate) fn ranking_indices(blocks: &[ItemSet], leaf: &[usize]) -> Vec<usize> {
    let m = leaf.len();
    let local = |item: usize| leaf.binary_search(&item).expect("block item outside leaf");
    // cross[x]: local items in later blocks that are smaller than x.
    let mut cross = vec![0usize; m];
    let mut later = ItemSet::EMPTY;
    let mut lists = Vec::with_capacity(blocks.len());
    let mut block_locals: Vec<Vec<usize>> = blocks.iter().map(|blk| blk.iter().map(local).collect()).collect();
    for locals in block_locals.iter().rev() {
        for &x in locals {
            cross[x] = later.count_below(x);
        }
        for &x in locals {
            later.insert(x);
        }
    }
    let mut pos = 0;
    for locals in block_locals.iter_mut() {
        let len = locals.len();
        let mut l = Vec::new();
        block_arrangements(locals, &cross, pos, m, 0, &mut l);
        lists.push(l);
        pos += len;
    }
    combine(lists)
}
