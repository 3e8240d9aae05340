//! Lexicographic enumeration of `k`-subsets of `0..n` with random access by
//! rank, so scans can be split into independent chunks.

/// `C(n, k)`, or `None` on `u128` overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// The subset of lexicographic rank `rank` among all `k`-subsets of `0..n`.
pub fn unrank(mut rank: u128, n: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut c = 0;
    for i in 0..k {
        loop {
            let with_c = binomial(n - c - 1, k - i - 1).expect("rank fits");
            if rank < with_c {
                break;
            }
            rank -= with_c;
            c += 1;
        }
        out.push(c);
        c += 1;
    }
    out
}

/// Advances `comb` to its lexicographic successor; `false` after the last.
pub fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
