//! Seeded parallel ensembles.
//!
//! Run `i` always draws from its own stream, workers share only immutable
//! inputs, and results are folded in run-index order, so output does not
//! depend on the worker count.

use evostab_core::evolution::{run_with_rng, AgentPool, EvoParams};
use evostab_core::genome::UserRequest;
use evostab_core::macrostate::{
    degree_of_instability, limit_occupation, MacroLabel, MacroStatePartition, OccupationCounts, OccupationSeries,
};
use evostab_core::rng::{stream, stream2, StreamRng};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

pub const WORKERS_ENV: &str = "EVOSTAB_WORKERS";

/// Explicit count, else `EVOSTAB_WORKERS`, else available parallelism.
pub fn resolve_workers(explicit: Option<usize>) -> CliResult<usize> {
    if let Some(n) = explicit {
        return if n == 0 { Err(CliError::Config("workers: must be at least 1".into())) } else { Ok(n) };
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(format!("{WORKERS_ENV}: expected a positive integer, got {v:?}"))),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Fixed-size worker set.
pub struct Workers(rayon::ThreadPool);

impl Workers {
    pub fn new(n: usize) -> CliResult<Self> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(Workers)
            .map_err(|e| CliError::Config(format!("workers: {e}")))
    }

    /// `f(0), …, f(n-1)` computed in parallel, returned in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.0.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

/// Inputs shared by every run of an ensemble.
pub struct EnsembleSpec<'a> {
    pub request: &'a UserRequest,
    pub pool: &'a AgentPool,
    pub params: &'a EvoParams,
    pub partition: &'a MacroStatePartition,
    pub generations: usize,
}

/// Macro-state counts over `runs` runs; run `i` uses `rng_of(i)`.
pub fn occupation_counts(
    workers: &Workers,
    spec: &EnsembleSpec<'_>,
    runs: usize,
    rng_of: impl Fn(usize) -> StreamRng + Sync + Send,
) -> CliResult<OccupationCounts> {
    let labels: Vec<Result<Vec<MacroLabel>, evostab_core::Error>> = workers.map(runs, |i| {
        let mut rng = rng_of(i);
        let t = run_with_rng(spec.request, spec.pool, spec.params, spec.partition, spec.generations, &mut rng)?;
        Ok(t.labels().collect())
    });
    let mut counts = OccupationCounts::new(spec.partition, spec.generations);
    for run in labels {
        counts.add_run(spec.partition, run?.into_iter())?;
    }
    Ok(counts)
}

/// Occupation series of an ensemble seeded by `seed`, run `i` on stream `i`.
pub fn macrostate_ensemble(workers: &Workers, spec: &EnsembleSpec<'_>, runs: usize, seed: u64) -> CliResult<OccupationSeries> {
    Ok(occupation_counts(workers, spec, runs, |i| stream(seed, i as u64))?.to_series()?)
}

/// d_ins of an occupation series over its trailing `window` generations.
pub fn instability(series: &OccupationSeries, part: &MacroStatePartition, window: usize) -> CliResult<f64> {
    let limit = limit_occupation(series, window)?;
    Ok(degree_of_instability(&limit, part.n_levels())?)
}

/// Stream of run `run` in sweep cell `cell`.
pub fn sweep_stream(seed: u64, cell: usize, run: usize) -> StreamRng {
    stream2(seed, cell as u32, run as u32)
}
