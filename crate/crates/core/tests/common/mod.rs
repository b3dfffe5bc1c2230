//! Independent reference implementations used as test oracles. Nothing here
//! calls into the crate's alignment code.

#![allow(dead_code)]

/// Textbook Levenshtein distance, two rolling rows.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ai) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, bj) in b.iter().enumerate() {
            let sub = prev[j] + if ai == bj { 0 } else { 1 };
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Min over every prefix `b[..r]` of the edit distance to `a`, and the
/// largest minimizing `r`.
pub fn best_prefix<T: PartialEq>(a: &[T], b: &[T]) -> (usize, usize) {
    let mut best = (usize::MAX, 0);
    for r in 0..=b.len() {
        let d = edit_distance(a, &b[..r]);
        if d <= best.0 {
            best = (d, r);
        }
    }
    best
}

/// Brute-force partial WER: errors and matched words summed over partials.
pub fn pwer_counts(partials: &[Vec<String>], reference: &[String]) -> (u64, u64) {
    partials.iter().fold((0, 0), |(e, m), p| {
        let (d, r) = best_prefix(p, reference);
        (e + d as u64, m + r as u64)
    })
}

/// Word `p` of `cur` is unstable when `next` disagrees with `cur` anywhere
/// at or before `p`.
pub fn upwr_counts(results: &[Vec<String>]) -> (u64, u64) {
    let mut changed = 0;
    let mut total = 0;
    for i in 0..results.len().saturating_sub(1) {
        let (cur, next) = (&results[i], &results[i + 1]);
        for p in 0..cur.len() {
            total += 1;
            if (0..=p).any(|q| next.get(q) != Some(&cur[q])) {
                changed += 1;
            }
        }
    }
    (changed, total)
}

pub fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}
