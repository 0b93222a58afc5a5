//! Chunked kernels with a fixed reduction tree.
//!
//! Work is split into chunks of [`CHUNK`] items. Partial results are always
//! combined left to right in chunk order, so sums do not depend on how many
//! threads computed the chunks.

use alloc::vec::Vec;
use core::ops::Range;
use core::sync::atomic::{AtomicUsize, Ordering};

pub const CHUNK: usize = 1 << 14;

static THREADS: AtomicUsize = AtomicUsize::new(1);

/// Number of worker threads used by the parallel kernels (1 = sequential).
pub fn threads() -> usize {
    THREADS.load(Ordering::Relaxed).max(1)
}

pub fn set_threads(n: usize) {
    THREADS.store(n.max(1), Ordering::Relaxed);
}

fn chunk_ranges(len: usize) -> impl Iterator<Item = Range<usize>> + Clone {
    (0..len.div_ceil(CHUNK)).map(move |c| c * CHUNK..((c + 1) * CHUNK).min(len))
}

/// Sum of `f(range)` over all chunks of `0..len`, combined in chunk order.
pub fn sum<F>(len: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync,
{
    map_reduce(len, f).iter().sum()
}

/// Maximum of `f(range)` over all chunks (0 for an empty range).
pub fn max<F>(len: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync,
{
    map_reduce(len, f).into_iter().fold(0.0, f64::max)
}

/// Per-chunk results of `f`, in chunk order.
pub fn map_reduce<F>(len: usize, f: F) -> Vec<f64>
where
    F: Fn(Range<usize>) -> f64 + Sync,
{
    map_chunks(len, f)
}

/// Per-chunk results of `f` of any type, in chunk order.
pub fn map_chunks<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send + Default + Clone,
    F: Fn(Range<usize>) -> T + Sync,
{
    let ranges: Vec<Range<usize>> = chunk_ranges(len).collect();
    let workers = threads().min(ranges.len());
    if workers <= 1 {
        return ranges.into_iter().map(f).collect();
    }
    parallel_map(&ranges, workers, &f)
}

/// Fill `out` chunk by chunk: `f(start, chunk)` writes `out[start..start + chunk.len()]`.
pub fn fill<F>(out: &mut [f64], f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let workers = threads().min(out.len().div_ceil(CHUNK));
    if workers <= 1 {
        for (c, chunk) in out.chunks_mut(CHUNK).enumerate() {
            f(c * CHUNK, chunk);
        }
        return;
    }
    parallel_fill(out, workers, &f);
}

#[cfg(feature = "std")]
fn parallel_map<T, F>(ranges: &[Range<usize>], workers: usize, f: &F) -> Vec<T>
where
    T: Send + Default + Clone,
    F: Fn(Range<usize>) -> T + Sync,
{
    let mut out = alloc::vec![T::default(); ranges.len()];
    let per = ranges.len().div_ceil(workers);
    std::thread::scope(|scope| {
        for (slot, rs) in out.chunks_mut(per).zip(ranges.chunks(per)) {
            scope.spawn(move || {
                for (o, r) in slot.iter_mut().zip(rs) {
                    *o = f(r.clone());
                }
            });
        }
    });
    out
}

#[cfg(not(feature = "std"))]
fn parallel_map<T, F>(ranges: &[Range<usize>], _workers: usize, f: &F) -> Vec<T>
where
    T: Send + Default + Clone,
    F: Fn(Range<usize>) -> T + Sync,
{
    ranges.iter().cloned().map(f).collect()
}

#[cfg(feature = "std")]
fn parallel_fill<F>(out: &mut [f64], workers: usize, f: &F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let chunks: Vec<(usize, &mut [f64])> = out
        .chunks_mut(CHUNK)
        .enumerate()
        .map(|(c, s)| (c * CHUNK, s))
        .collect();
    let per = chunks.len().div_ceil(workers);
    let mut groups: Vec<Vec<(usize, &mut [f64])>> = Vec::new();
    let mut it = chunks.into_iter().peekable();
    while it.peek().is_some() {
        groups.push(it.by_ref().take(per).collect());
    }
    std::thread::scope(|scope| {
        for group in groups {
            scope.spawn(move || {
                for (start, chunk) in group {
                    f(start, chunk);
                }
            });
        }
    });
}

#[cfg(not(feature = "std"))]
fn parallel_fill<F>(out: &mut [f64], _workers: usize, f: &F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    for (c, chunk) in out.chunks_mut(CHUNK).enumerate() {
        f(c * CHUNK, chunk);
    }
}
