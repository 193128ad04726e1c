use rayon::prelude::*;

/// Environment variable capping the worker count.
pub const THREADS_VAR: &str = "NIJTOEP_THREADS";

pub fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_VAR)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|t| *t > 0);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    builder.build().expect("thread pool")
}

/// Maps `f` over `items` in parallel, keeping input order. The first error
/// in input order wins, so the outcome does not depend on scheduling.
pub fn map_ordered<T, U, E, F>(items: &[T], f: F) -> Result<Vec<U>, E>
where
    T: Sync,
    U: Send,
    E: Send,
    F: Fn(&T) -> Result<U, E> + Sync,
{
    let results: Vec<Result<U, E>> = thread_pool().install(|| items.par_iter().map(&f).collect());
    results.into_iter().collect()
}
