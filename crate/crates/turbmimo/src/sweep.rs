//! Parallel sweep driver.
//!
//! Realizations are independent work units scheduled on a rayon pool; the
//! records land in per-point accumulators keyed by realization index, so
//! the output matches [`turbmimo_core::experiment::run_sweep`] for any
//! worker count.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use turbmimo_core::experiment::{
    simulate_realization, ModeContext, PointAccumulator, RealizationRecord, SimConfig, SweepRow,
};

use crate::error::{AppError, AppResult};

/// Worker count used when none is requested.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Realization records of a sweep, indexed `[cn2 index][n index]`.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub cn2: Vec<f64>,
    pub n_modes: Vec<usize>,
    pub points: Vec<Vec<PointAccumulator>>,
}

impl SweepTable {
    /// Rows ordered by `cn2`, then `n`, then regime.
    pub fn rows(&self, config: &SimConfig) -> AppResult<Vec<SweepRow>> {
        let mut rows = Vec::new();
        for (ci, &c) in self.cn2.iter().enumerate() {
            for (ni, &n) in self.n_modes.iter().enumerate() {
                rows.extend(self.points[ci][ni].finalize(config, c, n)?);
            }
        }
        Ok(rows)
    }
}

/// Runs the full sweep on `workers` threads.
pub fn run_parallel(config: &SimConfig, workers: usize) -> AppResult<Vec<SweepRow>> {
    accumulate_parallel(config, workers)?.rows(config)
}

/// Runs every realization of the sweep on `workers` threads and keeps the
/// per-realization records.
pub fn accumulate_parallel(config: &SimConfig, workers: usize) -> AppResult<SweepTable> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| AppError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| sweep(config))
}

fn sweep(config: &SimConfig) -> AppResult<SweepTable> {
    let cn2 = config.cn2_values();
    let contexts = (0..config.n_modes_sweep.len())
        .into_par_iter()
        .map(|i| ModeContext::new(config, i))
        .collect::<Result<Vec<_>, _>>()?;

    let units: Vec<(usize, usize, usize)> = (0..cn2.len())
        .flat_map(|ci| (0..contexts.len()).flat_map(move |ni| (0..config.n_mc).map(move |r| (ci, ni, r))))
        .collect();
    let total = units.len();
    let done = AtomicUsize::new(0);
    let step = (total / 20).max(1);
    log::info!(
        "sweep: {} cn2 points x {} rail counts x {} realizations",
        cn2.len(),
        contexts.len(),
        config.n_mc
    );

    let records: Vec<(usize, usize, usize, RealizationRecord)> = units
        .par_iter()
        .map(|&(ci, ni, r)| {
            let rec = simulate_realization(config, &contexts[ni], ci, cn2[ci], r)?;
            let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
            if finished % step == 0 || finished == total {
                log::info!("sweep: {finished}/{total} realizations");
            }
            Ok((ci, ni, r, rec))
        })
        .collect::<Result<_, turbmimo_core::Error>>()?;

    let mut table = vec![vec![PointAccumulator::new(); contexts.len()]; cn2.len()];
    for (ci, ni, r, rec) in records {
        table[ci][ni].insert(r, rec);
    }
    Ok(SweepTable {
        cn2,
        n_modes: contexts.iter().map(|c| c.n).collect(),
        points: table,
    })
}
