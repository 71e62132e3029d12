//! Parallel trial execution.

use anyhow::{Context, Result};
use otfs_core::link::{LinkConfig, LinkSimulator, SimResult};
use rayon::prelude::*;

/// Runs every trial of `cfg` once per codeblock size on `workers` threads.
///
/// Trials are collected in index order before merging, so the result does
/// not depend on the worker count or on scheduling.
pub fn run_parallel(cfg: &LinkConfig, sizes: &[Option<usize>], workers: usize) -> Result<SimResult> {
    let sim = LinkSimulator::new(cfg, sizes)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building the worker pool")?;
    log::info!("{} trials on {} workers", sim.trials(), workers.max(1));
    let tallies = pool.install(|| {
        (0..sim.trials())
            .into_par_iter()
            .map(|t| sim.trial(t))
            .collect::<otfs_core::Result<Vec<_>>>()
    })?;
    let mut total = sim.empty_tally();
    for t in &tallies {
        total.merge(t);
    }
    Ok(sim.result(&total))
}

/// Worker count to use when neither the command line nor the config sets one.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
