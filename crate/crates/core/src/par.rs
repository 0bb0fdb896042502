//! Data-parallel execution helpers.
//!
//! Pointwise kernels and spectral transforms run over disjoint chunks of flat
//! buffers.  With the `parallel` feature the chunks are distributed by rayon;
//! otherwise they run sequentially.  Chunk boundaries are fixed, all writes are
//! disjoint, and reductions combine per-chunk partials in chunk order, so
//! results are bit-identical regardless of thread count.

/// Number of grid points per work item.
pub const CHUNK_POINTS: usize = 512;

#[cfg(feature = "parallel")]
pub fn run_items<F>(n_items: usize, f: F)
where
    F: Fn(usize) + Sync + Send,
{
    use rayon::prelude::*;
    (0..n_items).into_par_iter().for_each(f);
}

#[cfg(not(feature = "parallel"))]
pub fn run_items<F>(n_items: usize, f: F)
where
    F: Fn(usize) + Sync + Send,
{
    for i in 0..n_items {
        f(i);
    }
}

/// Applies `f` to corresponding chunks of one mutable output buffer, in
/// parallel.  `chunk` is measured in elements of `out`.
pub fn chunks_mut<T, F>(out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, c) in out.chunks_mut(chunk).enumerate() {
            f(i, c);
        }
    }
}

/// Deterministic parallel sum: per-chunk partials are computed in parallel
/// from fixed chunk boundaries and folded in chunk order.
pub fn sum_chunked<F>(n_items: usize, chunk: usize, f: F) -> f64
where
    F: Fn(std::ops::Range<usize>) -> f64 + Sync,
{
    let n_chunks = n_items.div_ceil(chunk.max(1));
    let mut partial = vec![0.0; n_chunks];
    chunks_mut(&mut partial, 1, |i, slot| {
        let lo = i * chunk;
        let hi = (lo + chunk).min(n_items);
        slot[0] = f(lo..hi);
    });
    partial.iter().sum()
}

/// Deterministic parallel max (same structure as [`sum_chunked`]).
pub fn max_chunked<F>(n_items: usize, chunk: usize, f: F) -> f64
where
    F: Fn(std::ops::Range<usize>) -> f64 + Sync,
{
    let n_chunks = n_items.div_ceil(chunk.max(1));
    let mut partial = vec![f64::NEG_INFINITY; n_chunks];
    chunks_mut(&mut partial, 1, |i, slot| {
        let lo = i * chunk;
        let hi = (lo + chunk).min(n_items);
        slot[0] = f(lo..hi);
    });
    partial.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
