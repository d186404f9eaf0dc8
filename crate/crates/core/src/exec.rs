//! Data-parallel loop helpers with a sequential fallback.
//!
//! Every hot loop in the crate (per-sample residuals, constraint scans,
//! product enumeration, sweep cells) goes through this module. With the
//! `parallel` feature the loops run on rayon, honoring the
//! `STAB_MAX_THREADS` environment variable; without it they run the
//! sequential implementations in [`seq`]. Only order-independent
//! reductions are used (min/max with lowest-index tie-breaks, or
//! map-into-buffer followed by a sequential fold), so results are bitwise
//! identical across schedules and across the two modes.

/// Sequential implementations. Always compiled; the benchmarks compare
/// these against the rayon versions directly.
pub mod seq {
    /// Index and score of the maximal element, ties broken by lowest index.
    pub fn max_scored<T>(items: &[T], score: impl Fn(usize, &T) -> f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, item) in items.iter().enumerate() {
            let s = score(i, item);
            match best {
                Some((_, b)) if s.total_cmp(&b) != std::cmp::Ordering::Greater => {}
                _ => best = Some((i, s)),
            }
        }
        best
    }

    /// Index and score of the minimal element, ties broken by lowest index.
    pub fn min_scored<T>(items: &[T], score: impl Fn(usize, &T) -> f64) -> Option<(usize, f64)> {
        max_scored(items, |i, t| -score(i, t)).map(|(i, s)| (i, -s))
    }

    /// Order-preserving map.
    pub fn map_collect<T, U>(items: &[T], f: impl Fn(usize, &T) -> U) -> Vec<U> {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

#[cfg(feature = "parallel")]
pub mod par {
    use rayon::prelude::*;
    use std::sync::OnceLock;

    /// Items below this count are not worth splitting.
    const MIN_CHUNK: usize = 256;

    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();

    /// Runs `f` on the pool capped by `STAB_MAX_THREADS`, or on the global
    /// rayon pool when the variable is unset.
    pub fn run<R: Send>(f: impl FnOnce() -> R + Send) -> R {
        let pool = POOL.get_or_init(|| {
            std::env::var("STAB_MAX_THREADS")
                .ok()
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|&t| t >= 1)
                .and_then(|t| rayon::ThreadPoolBuilder::new().num_threads(t).build().ok())
        });
        match pool {
            Some(p) => p.install(f),
            None => f(),
        }
    }

    pub fn max_scored<T: Sync>(
        items: &[T],
        score: impl Fn(usize, &T) -> f64 + Sync,
    ) -> Option<(usize, f64)> {
        if items.len() < 2 * MIN_CHUNK {
            // Below two chunks the split cannot pay for the fork.
            return super::seq::max_scored(items, score);
        }
        run(|| {
            items
                .par_iter()
                .enumerate()
                .with_min_len(MIN_CHUNK)
                .map(|(i, t)| (i, score(i, t)))
                .reduce_with(|a, b| {
                    match a.1.total_cmp(&b.1) {
                        std::cmp::Ordering::Greater => a,
                        std::cmp::Ordering::Less => b,
                        std::cmp::Ordering::Equal => {
                            if a.0 <= b.0 {
                                a
                            } else {
                                b
                            }
                        }
                    }
                })
        })
    }

    pub fn min_scored<T: Sync>(
        items: &[T],
        score: impl Fn(usize, &T) -> f64 + Sync,
    ) -> Option<(usize, f64)> {
        max_scored(items, |i, t| -score(i, t)).map(|(i, s)| (i, -s))
    }

    pub fn map_collect<T: Sync, U: Send>(
        items: &[T],
        f: impl Fn(usize, &T) -> U + Sync,
    ) -> Vec<U> {
        run(|| {
            items
                .par_iter()
                .enumerate()
                .with_min_len(1)
                .map(|(i, t)| f(i, t))
                .collect()
        })
    }
}

#[cfg(feature = "parallel")]
pub use par::{map_collect, max_scored, min_scored};

#[cfg(not(feature = "parallel"))]
pub use seq::{map_collect, max_scored, min_scored};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_scored_breaks_ties_by_lowest_index() {
        let v = [1.0, 3.0, 3.0, 2.0];
        assert_eq!(seq::max_scored(&v, |_, x| *x), Some((1, 3.0)));
        assert_eq!(max_scored(&v, |_, x| *x), Some((1, 3.0)));
    }

    #[test]
    fn min_scored_matches_seq() {
        let v: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        assert_eq!(seq::min_scored(&v, |_, x| *x), min_scored(&v, |_, x| *x));
    }

    #[test]
    fn empty_slice_yields_none() {
        let v: [f64; 0] = [];
        assert_eq!(max_scored(&v, |_, x| *x), None);
    }
}
