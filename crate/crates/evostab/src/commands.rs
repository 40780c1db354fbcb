//! The experiment commands.

use std::path::{Path, PathBuf};

use evostab_core::evolution::{run, step_generation, AgentPool, RunTrajectory};
use evostab_core::habitat::{simulate_ecosystem_with, EcosystemParams};
use evostab_core::macrostate::{enumerate_micro_chain, MacroLabel, MicroChain, OccupationSeries};
use evostab_core::markov::{evolve_path, l1};
use evostab_core::rng::stream;

use crate::config::ExperimentConfig;
use crate::ensemble::{instability, macrostate_ensemble, occupation_counts, sweep_stream, EnsembleSpec, Workers};
use crate::error::{CliError, CliResult};
use crate::io::{self, SweepRow};
use crate::network::{epoch_records, EpochRecord, NetworkConfig};
use crate::viz::{self, Group};

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub generations: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Applies the overrides that act on top-level fields.
pub fn apply(mut cfg: ExperimentConfig, o: &Overrides) -> ExperimentConfig {
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(r) = o.runs {
        cfg.runs = r;
    }
    if let Some(g) = o.generations {
        cfg.generations = g;
    }
    if let Some(p) = &o.out {
        cfg.out = Some(p.clone());
    }
    cfg
}

fn out_path(cfg: &ExperimentConfig) -> CliResult<&Path> {
    cfg.out.as_deref().ok_or_else(|| CliError::Config("out: no output path given".into()))
}

/// `path` with `suffix` appended to its file stem and extension `ext`.
pub fn sibling(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

/// The configured single run.
pub fn single_run(cfg: &ExperimentConfig) -> CliResult<RunTrajectory> {
    cfg.validate()?;
    Ok(run(
        &cfg.user_request()?,
        &cfg.agent_pool()?,
        &cfg.evo_params()?,
        &cfg.partition()?,
        cfg.generations,
        cfg.seed,
    )?)
}

pub fn cmd_evolve(cfg: &ExperimentConfig) -> CliResult<RunTrajectory> {
    let out = out_path(cfg)?;
    let t = single_run(cfg)?;
    io::write_trajectory(out, &t.records, &cfg.partition()?)?;
    Ok(t)
}

pub struct MacrostateReport {
    pub series: OccupationSeries,
    pub d_ins: f64,
}

impl MacrostateReport {
    pub fn final_probability(&self, cfg: &ExperimentConfig, label: MacroLabel) -> CliResult<f64> {
        let part = cfg.partition()?;
        Ok(self.series.rows.last().map_or(0.0, |r| r.entries()[part.index(label)]))
    }
}

/// Ensemble occupation at the configured parameters, without writing.
pub fn macrostates(cfg: &ExperimentConfig, workers: &Workers) -> CliResult<MacrostateReport> {
    cfg.validate()?;
    let (request, pool, params, partition) = (cfg.user_request()?, cfg.agent_pool()?, cfg.evo_params()?, cfg.partition()?);
    let spec = EnsembleSpec { request: &request, pool: &pool, params: &params, partition: &partition, generations: cfg.generations };
    let series = macrostate_ensemble(workers, &spec, cfg.runs, cfg.seed)?;
    let d_ins = instability(&series, &partition, cfg.effective_window())?;
    Ok(MacrostateReport { series, d_ins })
}

pub fn cmd_macrostates(cfg: &ExperimentConfig, workers: &Workers) -> CliResult<MacrostateReport> {
    let out = out_path(cfg)?;
    let report = macrostates(cfg, workers)?;
    io::write_occupation(out, &report.series, &cfg.partition()?)?;
    Ok(report)
}

/// d_ins for every (mutation, crossover) cell of the grid, mutation-major.
pub fn sweep(cfg: &ExperimentConfig, o: &Overrides, workers: &Workers) -> CliResult<Vec<SweepRow>> {
    let grid = cfg.sweep.grid()?;
    let runs = o.runs.or(cfg.sweep.runs).unwrap_or(cfg.runs);
    let generations = o.generations.unwrap_or(cfg.sweep.generations);
    let mut cell_cfg = cfg.clone();
    cell_cfg.runs = runs;
    cell_cfg.generations = generations;
    cell_cfg.validate()?;
    let (request, pool, partition) = (cell_cfg.user_request()?, cell_cfg.agent_pool()?, cell_cfg.partition()?);
    let base = cell_cfg.evo_params()?;
    let mut rows = Vec::with_capacity(grid.len() * grid.len());
    for (mi, &m) in grid.iter().enumerate() {
        for (ci, &c) in grid.iter().enumerate() {
            let cell = mi * grid.len() + ci;
            let mut params = base.clone();
            params.mutation_rate = m;
            params.crossover_rate = c;
            let spec = EnsembleSpec { request: &request, pool: &pool, params: &params, partition: &partition, generations };
            let series = occupation_counts(workers, &spec, runs, |i| sweep_stream(cell_cfg.seed, cell, i))?.to_series()?;
            rows.push(SweepRow { mutation_rate: m, crossover_rate: c, d_ins: instability(&series, &partition, cell_cfg.effective_window())? });
        }
    }
    Ok(rows)
}

pub fn cmd_sweep(cfg: &ExperimentConfig, o: &Overrides, workers: &Workers) -> CliResult<Vec<SweepRow>> {
    let out = out_path(cfg)?.to_path_buf();
    let rows = sweep(cfg, o, workers)?;
    io::write_sweep(&out, &rows)?;
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MicroCheck {
    pub generation: usize,
    pub exact: Vec<f64>,
    pub empirical: Vec<f64>,
    pub l1: f64,
}

pub struct MicroReport {
    pub chain: MicroChain,
    pub checks: Vec<MicroCheck>,
    pub tolerance: f64,
}

impl MicroReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.l1 <= self.tolerance)
    }
}

/// Exact micro-state law at each checkpoint against ensemble frequencies.
pub fn micro_oracle(cfg: &ExperimentConfig, workers: &Workers) -> CliResult<MicroReport> {
    let (micro, r) = cfg.micro_config()?;
    let params = micro.evo_params(cfg.micro.mutation_rate);
    let chain = enumerate_micro_chain(&micro, &r, &params)?;
    let pool = AgentPool::new(micro.pool.clone())?;
    let mut checkpoints = cfg.micro.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let horizon = checkpoints.last().copied().unwrap_or(0);
    let path = evolve_path(&chain.initial, &chain.matrix, horizon)?;
    let n = chain.states.len();

    let visits: Vec<CliResult<Vec<usize>>> = workers.map(cfg.micro.runs, |i| {
        let mut rng = stream(cfg.seed, i as u64);
        let mut pop = chain.initial_population(&micro, &mut rng);
        let mut seen = Vec::with_capacity(checkpoints.len());
        let mut next = checkpoints.iter().peekable();
        let state = |pop: &evostab_core::evolution::Population| chain.state_of(pop).ok_or_else(|| CliError::Core(evostab_core::Error::InvalidState("population left the micro model".into())));
        while next.peek() == Some(&&0) {
            seen.push(state(&pop)?);
            next.next();
        }
        for g in 1..=horizon {
            pop = step_generation(&pop, &r, &pool, &params, &mut rng)?;
            while next.peek() == Some(&&g) {
                seen.push(state(&pop)?);
                next.next();
            }
        }
        Ok(seen)
    });
    let mut counts = vec![vec![0u64; n]; checkpoints.len()];
    for v in visits {
        for (k, s) in v?.into_iter().enumerate() {
            counts[k][s] += 1;
        }
    }
    let runs = cfg.micro.runs as f64;
    let checks = checkpoints
        .iter()
        .zip(counts)
        .map(|(&g, c)| {
            let exact = path[g].entries().to_vec();
            let empirical: Vec<f64> = c.iter().map(|&k| k as f64 / runs).collect();
            MicroCheck { generation: g, l1: l1(&exact, &empirical), exact, empirical }
        })
        .collect();
    Ok(MicroReport { chain, checks, tolerance: cfg.micro.tolerance })
}

pub fn cmd_micro_oracle(cfg: &ExperimentConfig, workers: &Workers) -> CliResult<MicroReport> {
    let report = micro_oracle(cfg, workers)?;
    write_micro_report(cfg, &report)?;
    Ok(report)
}

/// Writes `generation,l1` and the matrix next to it; fails with a tolerance
/// error if any checkpoint exceeds the tolerance.
pub fn write_micro_report(cfg: &ExperimentConfig, report: &MicroReport) -> CliResult<()> {
    let out = out_path(cfg)?.to_path_buf();
    let mut text = String::from("generation,l1\n");
    for c in &report.checks {
        text.push_str(&format!("{},{}\n", c.generation, c.l1));
    }
    io::write_text(&out, &text)?;
    io::write_matrix(&sibling(&out, "_matrix", "csv"), &report.chain.matrix)?;
    if let Some(bad) = report.checks.iter().find(|c| c.l1 > report.tolerance) {
        return Err(CliError::Tolerance(format!(
            "micro oracle: L1 {} at generation {} exceeds {}",
            bad.l1, bad.generation, report.tolerance
        )));
    }
    Ok(())
}

pub fn ecosystem(cfg: &ExperimentConfig, o: &Overrides, workers: &Workers) -> CliResult<Vec<EpochRecord>> {
    let eco = &cfg.ecosystem;
    let network = eco.network.clone().unwrap_or_else(NetworkConfig::two_clusters);
    let (mut net, menu) = network.build(&cfg.limits(), eco.archive_capacity)?;
    let params = EcosystemParams {
        evo: cfg.evo_params()?,
        partition: cfg.partition()?,
        generations: o.generations.unwrap_or(eco.generations),
        epochs: eco.epochs,
        theta: eco.theta,
        seed: cfg.seed,
    };
    let metrics = simulate_ecosystem_with(&mut net, &menu, &params, |n, job| workers.map(n, job))?;
    Ok(epoch_records(&net, &metrics))
}

pub fn cmd_ecosystem(cfg: &ExperimentConfig, o: &Overrides, workers: &Workers) -> CliResult<Vec<EpochRecord>> {
    let out = out_path(cfg)?.to_path_buf();
    let records = ecosystem(cfg, o, workers)?;
    io::write_json_lines(&out, &records)?;
    Ok(records)
}

/// Re-runs the configured run and renders its final population: SVG to the
/// output path, text next to it.
pub fn cmd_viz(cfg: &ExperimentConfig) -> CliResult<(Vec<Group>, String)> {
    let out = out_path(cfg)?.to_path_buf();
    let t = single_run(cfg)?;
    let groups = viz::group_population(&t.final_population, &cfg.user_request()?);
    let text = viz::render_text(&groups);
    io::write_text(&out, &viz::render_svg(&groups))?;
    io::write_text(&sibling(&out, "", "txt"), &text)?;
    Ok((groups, text))
}
