//! Index arithmetic for the dense parameter tables.
//!
//! Relative-ranking tables are indexed by the lexicographic rank of the
//! best-to-worst sequence of local positions. Interleaving tables are
//! indexed by the lexicographic rank of the side pattern with `A < B`.

/// Largest `n` for which `n!` fits in a `u64`.
pub const MAX_FACTORIAL: usize = 20;

const fn pascal() -> [[u64; 65]; 65] {
    let mut t = [[0u64; 65]; 65];
    let mut n = 0;
    while n < 65 {
        t[n][0] = 1;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1].wrapping_add(t[n - 1][k]);
            k += 1;
        }
        n += 1;
    }
    t
}

static PASCAL: [[u64; 65]; 65] = pascal();

/// `C(n, k)` for `n <= 64`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        0
    } else {
        PASCAL[n][k]
    }
}

pub fn factorial(n: usize) -> u64 {
    assert!(n <= MAX_FACTORIAL, "{n}! overflows u64");
    (1..=n as u64).product()
}

pub fn factorial_f64(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Lexicographic rank of a permutation of `0..m`.
pub fn lex_rank(seq: &[usize]) -> usize {
    let m = seq.len();
    let mut rank = 0usize;
    let mut used = 0u64;
    for (k, &x) in seq.iter().enumerate() {
        let smaller_unused = x - (used & ((1u64 << x) - 1)).count_ones() as usize;
        rank += smaller_unused * factorial(m - 1 - k) as usize;
        used |= 1u64 << x;
    }
    rank
}

/// Inverse of [`lex_rank`].
pub fn lex_unrank(mut index: usize, m: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..m).collect();
    let mut out = Vec::with_capacity(m);
    for k in (0..m).rev() {
        let f = factorial(k) as usize;
        let d = index / f;
        index %= f;
        out.push(pool.remove(d));
    }
    out
}

/// Advances to the next permutation in lexicographic order; false when
/// `seq` was the last one (it is then left sorted descending).
pub fn next_permutation(seq: &mut [usize]) -> bool {
    if seq.len() < 2 {
        return false;
    }
    let mut i = seq.len() - 1;
    while i > 0 && seq[i - 1] >= seq[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = seq.len() - 1;
    while seq[j] <= seq[i - 1] {
        j -= 1;
    }
    seq.swap(i - 1, j);
    seq[i..].reverse();
    true
}

/// Number of lexicographically earlier patterns skipped by placing a `B`
/// when `a` As and `b` Bs remain (`b >= 1`).
#[inline]
pub(crate) fn b_step(a: usize, b: usize) -> usize {
    if a == 0 {
        0
    } else {
        binomial(a + b - 1, a - 1) as usize
    }
}

/// Rank contribution of `x` consecutive Bs starting with `a` As and `b` Bs
/// remaining.
#[inline]
pub(crate) fn b_run(a: usize, b: usize, x: usize) -> usize {
    (binomial(a + b, a) - binomial(a + b - x, a)) as usize
}

/// Lexicographic rank of a side pattern (`false` = A, `true` = B).
pub fn pattern_rank(pattern: &[bool]) -> usize {
    let mut b = pattern.iter().filter(|&&x| x).count();
    let mut a = pattern.len() - b;
    let mut rank = 0;
    for &is_b in pattern {
        if is_b {
            rank += b_step(a, b);
            b -= 1;
        } else {
            a -= 1;
        }
    }
    rank
}

/// Inverse of [`pattern_rank`] for `a` As and `b` Bs.
pub fn pattern_unrank(mut index: usize, mut a: usize, mut b: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(a + b);
    while a + b > 0 {
        let with_a = if a == 0 { 0 } else { binomial(a + b - 1, a - 1) as usize };
        if index < with_a {
            out.push(false);
            a -= 1;
        } else {
            index -= with_a;
            out.push(true);
            b -= 1;
        }
    }
    out
}
