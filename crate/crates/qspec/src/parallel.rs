//! Parallel grid evaluation. Points are independent and each draws from its
//! own random stream, so the result does not depend on the thread count.

use anyhow::Context;
use rayon::prelude::*;

use qspec_core::estimator::{ResponseEvaluator, ResponseGrid};

/// Environment variable holding the worker count (unset or 0: one per core).
pub const THREADS_ENV: &str = "QSPEC_THREADS";

pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn evaluate(ev: &ResponseEvaluator, threads: usize) -> anyhow::Result<ResponseGrid> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("starting worker pool")?;
    let values = pool.install(|| {
        (0..ev.len())
            .into_par_iter()
            .map(|i| ev.point(i))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(ev.assemble(values)?)
}
