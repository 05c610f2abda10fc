//! Lexicographic k-subsets of `0..n`, with ranking so enumerations can be
//! split into independent chunks.

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// The subset at lexicographic position `rank` among k-subsets of `0..n`.
pub fn unrank(n: usize, k: usize, mut rank: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        loop {
            let remaining = binomial(n - next - 1, k - slot - 1);
            if rank < remaining {
                break;
            }
            rank -= remaining;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Advances `subset` to its lexicographic successor; false when exhausted.
pub fn next_subset(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Visits the subsets with ranks in `[start, end)`.
pub fn for_each_in_range(n: usize, k: usize, start: u128, end: u128, mut f: impl FnMut(&[usize])) {
    if start >= end {
        return;
    }
    let mut subset = unrank(n, k, start);
    let mut rank = start;
    loop {
        f(&subset);
        rank += 1;
        if rank >= end || !next_subset(&mut subset, n) {
            break;
        }
    }
}

/// Splits `[0, total)` into at most `chunks` contiguous rank ranges.
pub fn rank_ranges(total: u128, chunks: usize) -> Vec<(u128, u128)> {
    let chunks = (chunks.max(1) as u128).min(total.max(1));
    let size = total.div_ceil(chunks);
    (0..chunks)
        .map(|c| (c * size, ((c + 1) * size).min(total)))
        .filter(|(a, b)| a < b)
        .collect()
}
