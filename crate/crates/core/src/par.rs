//! Scheduling-independent parallel reduction.

use std::ops::Range;

use rayon::prelude::*;

/// Blocks evaluated concurrently before their partial results are merged.
const GROUP: usize = 32;

/// Splits `0..n` into fixed blocks, evaluates them in parallel and merges the
/// partial results with a fixed pairwise tree per group of blocks and a left
/// fold across groups. The merge order depends only on `n` and `block`, never
/// on the number of worker threads.
pub fn deterministic_reduce<T: Send>(
    n: usize,
    block: usize,
    eval: impl Fn(Range<usize>) -> T + Sync,
    merge: impl Fn(T, T) -> T + Sync,
) -> Option<T> {
    let block = block.max(1);
    let n_blocks = n.div_ceil(block);
    let mut total: Option<T> = None;
    let mut start = 0;
    while start < n_blocks {
        let end = (start + GROUP).min(n_blocks);
        let parts: Vec<T> = (start..end)
            .into_par_iter()
            .map(|b| eval(b * block..((b + 1) * block).min(n)))
            .collect();
        if let Some(part) = tree_merge(parts, &merge) {
            total = Some(match total {
                Some(acc) => merge(acc, part),
                None => part,
            });
        }
        start = end;
    }
    total
}

fn tree_merge<T>(mut parts: Vec<T>, merge: &impl Fn(T, T) -> T) -> Option<T> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => merge(a, b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop()
}
