//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they run in order on the calling thread. Every helper writes result `i`
//! from closure call `i` alone, so outputs do not depend on the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
const MIN_CHUNK: usize = 256;

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// `items.iter().map(f).collect()`, possibly in parallel.
pub fn map_slice<A, T, F>(items: &[A], f: F) -> Vec<T>
where
    A: Sync,
    T: Send,
    F: Fn(&A) -> T + Sync + Send,
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

/// `out[i] = f(i)` for every element, possibly in parallel.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut()
            .with_min_len(MIN_CHUNK)
            .enumerate()
            .for_each(|(i, o)| *o = f(i));
    }
    #[cfg(not(feature = "parallel"))]
    {
        fill_indexed_sequential(out, f);
    }
}

pub fn fill_indexed_sequential<T, F>(out: &mut [T], f: F)
where
    F: Fn(usize) -> T,
{
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
}

/// Whether the parallel backend is compiled in.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
