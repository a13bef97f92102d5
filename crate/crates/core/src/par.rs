//! Data-parallel loop helpers.
//!
//! With the `parallel` feature the loops run on the rayon pool, otherwise
//! they fall back to plain iterators. Every helper writes disjoint output
//! ranges and performs no floating-point reductions across tasks, so both
//! paths produce bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Points per work item for per-point kernels.
pub const BLOCK: usize = 512;

/// Runs `f(block_start, slices)` over aligned blocks of several
/// equally-sized output arrays.
pub fn for_each_block<'a, F>(outputs: Vec<&'a mut [f64]>, block: usize, f: F)
where
    F: Fn(usize, &mut [&'a mut [f64]]) + Sync + Send,
{
    let len = outputs.first().map_or(0, |o| o.len());
    debug_assert!(outputs.iter().all(|o| o.len() == len));
    let nblocks = len.div_ceil(block);
    let mut blocks: Vec<Vec<&'a mut [f64]>> = (0..nblocks)
        .map(|_| Vec::with_capacity(outputs.len()))
        .collect();
    for comp in outputs {
        for (b, chunk) in comp.chunks_mut(block).enumerate() {
            blocks[b].push(chunk);
        }
    }
    #[cfg(feature = "parallel")]
    blocks
        .into_par_iter()
        .enumerate()
        .for_each(|(b, mut s)| f(b * block, &mut s));
    #[cfg(not(feature = "parallel"))]
    blocks
        .into_iter()
        .enumerate()
        .for_each(|(b, mut s)| f(b * block, &mut s));
}

/// Runs `f(chunk_index, chunk)` over `chunk_len`-sized pieces of `data`.
pub fn for_each_chunk<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

/// Collects `f(i)` for `i in 0..n`, in order.
pub fn map_indices<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Minimum and maximum of a slice (NaN entries are skipped).
pub fn min_max(values: &[f64]) -> (f64, f64) {
    let fold = |(lo, hi): (f64, f64), v: &f64| (lo.min(*v), hi.max(*v));
    #[cfg(feature = "parallel")]
    {
        values
            .par_chunks(4096)
            .map(|c| c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), fold))
            .reduce(
                || (f64::INFINITY, f64::NEG_INFINITY),
                |a, b| (a.0.min(b.0), a.1.max(b.1)),
            )
    }
    #[cfg(not(feature = "parallel"))]
    {
        values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), fold)
    }
}

/// Maximum absolute value of a slice.
pub fn max_abs(values: &[f64]) -> f64 {
    let (lo, hi) = min_max(values);
    if lo > hi {
        0.0
    } else {
        lo.abs().max(hi.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_cover_every_point_once() {
        let mut a = vec![0.0; 1030];
        let mut b = vec![0.0; 1030];
        for_each_block(vec![&mut a, &mut b], 100, |start, s| {
            for k in 0..s[0].len() {
                s[0][k] = (start + k) as f64;
                s[1][k] += 1.0;
            }
        });
        assert!(a.iter().enumerate().all(|(i, v)| *v == i as f64));
        assert!(b.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn min_max_handles_empty_and_signs() {
        assert_eq!(max_abs(&[]), 0.0);
        assert_eq!(min_max(&[3.0, -7.0, 2.0]), (-7.0, 3.0));
        assert_eq!(max_abs(&[3.0, -7.0, 2.0]), 7.0);
    }
}
