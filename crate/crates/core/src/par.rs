//! Ordered chunked map. Every chunk is computed independently and the results
//! come back in chunk order, so any reduction the caller performs is identical
//! with or without worker threads.

use alloc::vec::Vec;

#[cfg(feature = "std")]
pub(crate) fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&[T]) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_chunks(chunk.max(1)).map(f).collect()
}

#[cfg(not(feature = "std"))]
pub(crate) fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    F: Fn(&[T]) -> R,
{
    items.chunks(chunk.max(1)).map(f).collect()
}

#[cfg(feature = "std")]
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "std"))]
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}
