//! Enumeration and ranking of permutations in lexicographic order.

use crate::election::{CandidateId, Ranking};
use crate::{Error, Result};

/// Largest `n` for which all `n!` rankings are materialised.
pub const ENUMERATION_CAP: usize = 8;

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Number of ordered selections of `k` distinct items out of `n`.
pub fn falling_factorial(n: usize, k: usize) -> usize {
    (n - k + 1..=n).product()
}

pub fn check_cap(n: usize) -> Result<()> {
    if n > ENUMERATION_CAP {
        Err(Error::EnumerationCap { n, cap: ENUMERATION_CAP })
    } else {
        Ok(())
    }
}

/// All rankings of `n` candidates in lexicographic order of their position
/// sequences; index `i` of the result has [`lex_rank`] `i`.
pub fn all_rankings(n: usize) -> Result<Vec<Ranking>> {
    check_cap(n)?;
    let mut out = Vec::with_capacity(factorial(n));
    let mut order: Vec<usize> = (0..n).collect();
    loop {
        out.push(Ranking::from_indices_unchecked(&order));
        if !next_permutation(&mut order) {
            break;
        }
    }
    Ok(out)
}

fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Lexicographic index of a ranking among all rankings of its length.
pub fn lex_rank(ranking: &Ranking) -> usize {
    rank_partial(ranking.order().iter().map(|c| c.index()), ranking.len())
}

/// Lexicographic index of a sequence of distinct candidates drawn from
/// `0..n` among all such sequences of the same length.
pub fn rank_partial(seq: impl IntoIterator<Item = usize>, n: usize) -> usize {
    let seq: Vec<usize> = seq.into_iter().collect();
    let k = seq.len();
    let mut used = vec![false; n];
    let mut rank = 0;
    for (i, &c) in seq.iter().enumerate() {
        let smaller_unused = (0..c).filter(|&d| !used[d]).count();
        rank += smaller_unused * falling_factorial(n - i - 1, k - i - 1);
        used[c] = true;
    }
    rank
}

/// Inverse of [`lex_rank`].
pub fn unrank(mut rank: usize, n: usize) -> Ranking {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let f = factorial(i);
        order.push(pool.remove(rank / f));
        rank %= f;
    }
    Ranking::from_indices_unchecked(&order)
}

pub fn candidates(n: usize) -> impl Iterator<Item = CandidateId> {
    (0..n).map(CandidateId)
}
