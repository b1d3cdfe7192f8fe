//! Deterministic chunked reduction used by the data-parallel inner loops.
//!
//! Work over `n` items is split into fixed-size chunks. Each chunk is
//! reduced sequentially, and the chunk partials are combined by a pairwise
//! tree in chunk order. Because chunk boundaries and the combine order are
//! fixed, the result is bit-identical regardless of how many threads run
//! the chunk map, and identical to the sequential fallback built without
//! the `parallel` feature.

use std::cell::Cell;
use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) const CHUNK: usize = 1024;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with parallel dispatch disabled on this thread. The numeric
/// results are unchanged (reduction order is fixed either way); this only
/// forces the sequential code path, which the benchmarks compare against.
pub fn sequential_scope<R>(f: impl FnOnce() -> R) -> R {
    FORCE_SEQUENTIAL.with(|c| {
        let prev = c.replace(true);
        let out = f();
        c.set(prev);
        out
    })
}

fn force_sequential() -> bool {
    FORCE_SEQUENTIAL.with(|c| c.get())
}

fn chunk_ranges(n: usize) -> Vec<Range<usize>> {
    (0..n)
        .step_by(CHUNK)
        .map(|start| start..(start + CHUNK).min(n))
        .collect()
}

fn tree_combine<T>(mut parts: Vec<T>, combine: &(impl Fn(T, T) -> T + Sync)) -> Option<T> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut iter = parts.into_iter();
        while let Some(a) = iter.next() {
            match iter.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Maps fixed chunks of `0..n` and combines the partials pairwise in chunk
/// order. Returns `identity()` when `n == 0`.
pub fn reduce_chunks<T, M, C, I>(n: usize, map: M, combine: C, identity: I) -> T
where
    T: Send,
    M: Fn(Range<usize>) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
    I: FnOnce() -> T,
{
    let ranges = chunk_ranges(n);
    if ranges.is_empty() {
        return identity();
    }
    let parts = map_chunks(ranges, &map);
    tree_combine(parts, &combine).expect("non-empty partials")
}

#[cfg(feature = "parallel")]
fn map_chunks<T, M>(ranges: Vec<Range<usize>>, map: &M) -> Vec<T>
where
    T: Send,
    M: Fn(Range<usize>) -> T + Sync,
{
    if force_sequential() || ranges.len() == 1 {
        ranges.into_iter().map(map).collect()
    } else {
        ranges.into_par_iter().map(map).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn map_chunks<T, M>(ranges: Vec<Range<usize>>, map: &M) -> Vec<T>
where
    T: Send,
    M: Fn(Range<usize>) -> T + Sync,
{
    let _ = force_sequential();
    ranges.into_iter().map(map).collect()
}

/// Sums `f(i)` over `0..n` with the fixed chunked reduction.
pub fn sum_over(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    reduce_chunks(
        n,
        |range| range.map(&f).sum::<f64>(),
        |a, b| a + b,
        || 0.0,
    )
}

/// Accumulates per-item dense vectors of length `len` into one sum.
pub fn sum_vectors(n: usize, len: usize, fill: impl Fn(usize, &mut [f64]) + Sync) -> Vec<f64> {
    reduce_chunks(
        n,
        |range| {
            let mut acc = vec![0.0; len];
            for i in range {
                fill(i, &mut acc);
            }
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                *x += y;
            }
            a
        },
        || vec![0.0; len],
    )
}

/// Maps every index and keeps the best item under `better(candidate, best)`.
/// Ties resolve to the lowest index because candidates are visited in order
/// and `better` must be a strict improvement test.
pub fn argbest<T, F, B>(n: usize, eval: F, better: B) -> Option<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
    B: Fn(&T, &T) -> bool + Sync,
{
    reduce_chunks(
        n,
        |range| {
            let mut best: Option<T> = None;
            for i in range {
                let cand = eval(i);
                if best.as_ref().is_none_or(|b| better(&cand, b)) {
                    best = Some(cand);
                }
            }
            best
        },
        |a, b| match (a, b) {
            (Some(a), Some(b)) => {
                // `a` comes from earlier indices: keep it unless `b` is strictly better.
                if better(&b, &a) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (x, None) | (None, x) => x,
        },
        || None,
    )
}
