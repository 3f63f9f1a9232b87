//! Data-parallel helpers.
//!
//! With the `parallel` feature (on by default) these dispatch to rayon;
//! without it every call runs sequentially. Results are always collected in
//! index order and each element is computed independently, so parallel and
//! sequential execution produce bit-identical output.

/// How a data-parallel loop should be executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Use the rayon pool when the `parallel` feature is enabled.
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Whether this build can actually run work in parallel.
    pub fn available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Maps `f` over `0..len`, returning results in index order.
pub fn map_range<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..len).into_par_iter().map(f).collect()
        }
        _ => (0..len).map(f).collect(),
    }
}

/// Fills `out[i] = f(i)` for every index.
pub fn fill_indexed<T, F>(exec: Execution, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            const CHUNK: usize = 4096;
            out.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| {
                    let base = c * CHUNK;
                    for (j, v) in chunk.iter_mut().enumerate() {
                        *v = f(base + j);
                    }
                });
        }
        _ => {
            for (i, v) in out.iter_mut().enumerate() {
                *v = f(i);
            }
        }
    }
}

/// Runs `f` on a dedicated pool with `threads` workers, or on the global pool
/// when `threads` is `None`. Without the `parallel` feature `f` simply runs.
pub fn install<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

/// Sum with pairwise (cascade) reduction in fixed index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BASE: usize = 16;
    if values.len() <= BASE {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let a = map_range(Execution::Parallel, 10_000, f);
        let b = map_range(Execution::Sequential, 10_000, f);
        assert_eq!(a, b);

        let mut c = vec![0.0; 10_001];
        let mut d = vec![0.0; 10_001];
        fill_indexed(Execution::Parallel, &mut c, f);
        fill_indexed(Execution::Sequential, &mut d, f);
        assert_eq!(c, d);
        assert_eq!(c[..10_000], a[..]);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn install_runs_closure() {
        assert_eq!(install(Some(2), || 7), 7);
        assert_eq!(install(None, || 8), 8);
    }
}
