//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they run sequentially. [`sequential`] forces the sequential path at
//! runtime, which the benches use to compare both modes in one binary.
//! Callers must only hand in closures whose results do not depend on
//! execution order; outputs are always returned in input order.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

fn run_sequential() -> bool {
    !cfg!(feature = "parallel") || FORCE_SEQUENTIAL.with(Cell::get)
}

/// Run `f` with every helper in this module executing sequentially on the
/// calling thread.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let prev = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let out = f();
    FORCE_SEQUENTIAL.with(|c| c.set(prev));
    out
}

/// Map `f` over `0..n`, preserving order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if run_sequential() {
        return (0..n).map(f).collect();
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    unreachable!()
}

/// Map `f` over a slice, preserving order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if run_sequential() {
        return items.iter().map(f).collect();
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    unreachable!()
}

/// Run `f` on a pool capped at `threads` workers. `None` uses the global
/// pool; `Some(1)` is equivalent to [`sequential`].
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads {
        None => f(),
        Some(0 | 1) => sequential(f),
        #[cfg(feature = "parallel")]
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        #[cfg(not(feature = "parallel"))]
        Some(_) => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let par = map_range(1000, |i| i * i);
        let seq = sequential(|| map_range(1000, |i| i * i));
        assert_eq!(par, seq);
        assert_eq!(par[999], 999 * 999);
        let items: Vec<u32> = (0..50).collect();
        assert_eq!(map(&items, |x| x + 1), (1..51).collect::<Vec<_>>());
    }

    #[test]
    fn thread_cap_gives_same_output() {
        let a = with_threads(Some(3), || map_range(200, |i| i as f64 * 0.5));
        let b = with_threads(Some(1), || map_range(200, |i| i as f64 * 0.5));
        assert_eq!(a, b);
    }
}
