//! Slab-parallel iteration helpers.
//!
//! All data-parallel loops in the crate go through these functions. With the
//! `parallel` feature they dispatch to rayon; without it they run the same
//! closures sequentially. Each closure owns a disjoint chunk, so results do
//! not depend on how chunks are scheduled.

/// Execution strategy for slab loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Sequential,
    /// Uses rayon when compiled with the `parallel` feature, sequential otherwise.
    #[default]
    Rayon,
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Rayon
    }
}

/// Calls `f(chunk_index, chunk)` for every `chunk_len`-sized chunk of `data`.
pub fn for_each_chunk<T, F>(mode: Parallelism, data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk_len = chunk_len.max(1);
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = mode;
    data.chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c));
}

/// Runs `f` over a vector of independent work items.
pub fn for_each_item<T, F>(mode: Parallelism, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        items.par_iter_mut().for_each(&f);
        return;
    }
    let _ = mode;
    items.iter_mut().for_each(f);
}

/// Maps `f` over `0..n`, preserving order in the output.
pub fn map_indices<R, F>(mode: Parallelism, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Walks three equally shaped arrays plane by plane (`plane_len` elements
/// each) and returns the per-plane results in plane order.
pub fn map_planes3<T, R, F>(mode: Parallelism, a: &mut [T], b: &mut [T], c: &mut [T], plane_len: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T], &mut [T], &mut [T]) -> R + Sync + Send,
{
    let plane_len = plane_len.max(1);
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return a
            .par_chunks_mut(plane_len)
            .zip(b.par_chunks_mut(plane_len))
            .zip(c.par_chunks_mut(plane_len))
            .enumerate()
            .map(|(k, ((pa, pb), pc))| f(k, pa, pb, pc))
            .collect();
    }
    let _ = mode;
    a.chunks_mut(plane_len)
        .zip(b.chunks_mut(plane_len))
        .zip(c.chunks_mut(plane_len))
        .enumerate()
        .map(|(k, ((pa, pb), pc))| f(k, pa, pb, pc))
        .collect()
}

/// Zips the planes of two arrays whose planes have different sizes.
pub fn for_each_plane2<A, B, F>(mode: Parallelism, a: &mut [A], a_len: usize, b: &mut [B], b_len: usize, f: F)
where
    A: Send,
    B: Send,
    F: Fn(usize, &mut [A], &mut [B]) + Sync + Send,
{
    let (a_len, b_len) = (a_len.max(1), b_len.max(1));
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        a.par_chunks_mut(a_len)
            .zip(b.par_chunks_mut(b_len))
            .enumerate()
            .for_each(|(k, (pa, pb))| f(k, pa, pb));
        return;
    }
    let _ = mode;
    a.chunks_mut(a_len)
        .zip(b.chunks_mut(b_len))
        .enumerate()
        .for_each(|(k, (pa, pb))| f(k, pa, pb));
}
