//! Data-parallel helpers. With the `parallel` feature the loops run on the
//! rayon pool; without it they fall back to plain iterators. Reductions use
//! fixed-size chunks combined in order so results do not depend on the
//! scheduler.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for deterministic reductions.
const REDUCE_CHUNK: usize = 4096;

pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

pub fn for_each_indexed_mut<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    #[cfg(not(feature = "parallel"))]
    data.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
}

pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sum of `f(i, &data[i])`, bit-identical for any thread count.
pub fn sum_indexed<T, F>(data: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(usize, &T) -> f64 + Sync + Send,
{
    let partial = |(c, chunk): (usize, &[T])| -> f64 {
        let base = c * REDUCE_CHUNK;
        chunk
            .iter()
            .enumerate()
            .map(|(i, x)| f(base + i, x))
            .sum::<f64>()
    };
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = data
        .par_chunks(REDUCE_CHUNK)
        .enumerate()
        .map(partial)
        .collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = data.chunks(REDUCE_CHUNK).enumerate().map(partial).collect();
    partials.into_iter().sum()
}

/// Maximum of `f(x)` over the slice (0 for an empty slice).
pub fn max_by<T, F>(data: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_iter().map(f).reduce(|| 0.0, f64::max)
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.iter().map(f).fold(0.0, f64::max)
    }
}

/// Whether the crate was built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
