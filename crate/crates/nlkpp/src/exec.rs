//! Thin dispatch layer between the rayon data-parallel paths and the
//! sequential fallbacks compiled when the `parallel` feature is off.
//!
//! Every routine here is deterministic: work items are independent and
//! results are collected in input order, so parallel and sequential runs
//! produce bit-identical output.

/// Applies `f` to each `chunk`-sized column of `buf` and collects one result
/// per column, in column order.
pub fn map_columns_mut<R, F>(buf: &mut [f64], chunk: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &mut [f64]) -> R + Sync,
{
    #[cfg(feature = "parallel")]
    {
        map_columns_mut_parallel(buf, chunk, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_columns_mut_serial(buf, chunk, f)
    }
}

#[doc(hidden)]
pub fn map_columns_mut_serial<R, F>(buf: &mut [f64], chunk: usize, f: F) -> Vec<R>
where
    F: Fn(usize, &mut [f64]) -> R,
{
    buf.chunks_mut(chunk)
        .enumerate()
        .map(|(j, col)| f(j, col))
        .collect()
}

#[cfg(feature = "parallel")]
#[doc(hidden)]
pub fn map_columns_mut_parallel<R, F>(buf: &mut [f64], chunk: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &mut [f64]) -> R + Sync,
{
    use rayon::prelude::*;
    buf.par_chunks_mut(chunk)
        .enumerate()
        .map(|(j, col)| f(j, col))
        .collect()
}

/// Maps `f` over indexed items, preserving input order in the output.
pub fn map_items<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    #[cfg(feature = "parallel")]
    {
        map_items_parallel(items, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_items_serial(items, f)
    }
}

#[doc(hidden)]
pub fn map_items_serial<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(usize, &T) -> R,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(feature = "parallel")]
#[doc(hidden)]
pub fn map_items_parallel<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    use rayon::prelude::*;
    items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Sums `f(i)` over `0..n`. Chunked so the parallel and serial paths add the
/// partial sums in the same order.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    const CHUNK: usize = 64;
    let chunks: Vec<usize> = (0..n.div_ceil(CHUNK)).collect();
    let partial = |&c: &usize| -> f64 {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi).map(&f).sum()
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let parts: Vec<f64> = chunks.par_iter().map(partial).collect();
        parts.iter().sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let parts: Vec<f64> = chunks.iter().map(partial).collect();
        parts.iter().sum()
    }
}
