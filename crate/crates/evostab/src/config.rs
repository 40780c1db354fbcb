//! Experiment configuration.
//!
//! Every field has a default, so `{}` is a complete configuration. Unknown
//! fields are rejected so that typos surface as errors naming the field.

use std::fs;
use std::path::{Path, PathBuf};

use evostab_core::evolution::{AgentPool, EvoParams, MutationKinds};
use evostab_core::genome::{Agent, GenomeLimits, UserRequest};
use evostab_core::macrostate::{MacroStatePartition, MicroConfig, MicroGenotype};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::network::NetworkConfig;

/// A pool entry: either a bare attribute list or an agent with a count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoolEntry {
    Agent(Vec<u16>),
    Counted { agent: Vec<u16>, count: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKindsConfig {
    #[default]
    All,
    ReplacementOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Runs per cell; falls back to the top-level `runs`.
    pub runs: Option<usize>,
    pub generations: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { start: 0.0, stop: 1.0, step: 0.1, runs: Some(200), generations: 300 }
    }
}

impl SweepConfig {
    /// Grid points `start, start + step, …, stop`.
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        let bad = |m: &str| Err(CliError::Config(format!("sweep: {m}")));
        if !(self.step > 0.0) || !(0.0..=1.0).contains(&self.start) || !(0.0..=1.0).contains(&self.stop) {
            return bad("need 0 <= start <= stop <= 1 and step > 0");
        }
        if self.start > self.stop {
            return bad("start exceeds stop");
        }
        let cells = (self.stop - self.start) / self.step;
        let n = cells.round();
        if (cells - n).abs() > 1e-9 {
            return bad("step must divide stop - start");
        }
        // Snap to the decimal grid so 0.1 * 3 prints as 0.3.
        Ok((0..=n as usize)
            .map(|i| {
                let x = self.start + i as f64 * self.step;
                (x * 1e9).round() / 1e9
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MicroOracleConfig {
    /// At most two distinct single-attribute agents; repeats weight the draw.
    pub pool: Vec<Vec<u16>>,
    pub request: Vec<u16>,
    pub mutation_rate: f64,
    /// Two slots, each an agent or `[]` for dead; drawn from the pool if absent.
    pub start: Option<[Vec<u16>; 2]>,
    pub runs: usize,
    pub checkpoints: Vec<usize>,
    pub tolerance: f64,
}

impl Default for MicroOracleConfig {
    fn default() -> Self {
        MicroOracleConfig {
            pool: vec![vec![3], vec![5]],
            request: vec![3],
            mutation_rate: 0.5,
            start: None,
            runs: 10_000,
            checkpoints: vec![1, 5, 20, 100],
            tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EcosystemConfig {
    pub epochs: u32,
    /// Generations per request.
    pub generations: usize,
    pub theta: f64,
    pub archive_capacity: usize,
    pub network: Option<NetworkConfig>,
}

impl Default for EcosystemConfig {
    fn default() -> Self {
        EcosystemConfig {
            epochs: 200,
            generations: 20,
            theta: evostab_core::habitat::DEFAULT_THETA,
            archive_capacity: evostab_core::habitat::DEFAULT_ARCHIVE_CAPACITY,
            network: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub size_coefficient: f64,
    pub size_min: usize,
    pub size_max: usize,
    pub init_size: usize,
    pub init_len_max: usize,
    pub a_max: u16,
    pub l_agent: usize,
    pub l_hard: usize,
    pub mutation_kinds: MutationKindsConfig,
    pub request: Vec<u16>,
    pub pool: Vec<PoolEntry>,
    pub runs: usize,
    pub generations: usize,
    pub seed: u64,
    pub d_cap: u32,
    /// Trailing generations averaged for the limit occupation; 1 takes the
    /// final generation alone.
    pub window: usize,
    pub sweep: SweepConfig,
    pub micro: MicroOracleConfig,
    pub ecosystem: EcosystemConfig,
    pub out: Option<PathBuf>,
}

/// Attributes 1..=15 eight times each and a single copy of 16, so the last
/// requested attribute is rare.
pub fn default_pool() -> Vec<PoolEntry> {
    let mut pool: Vec<PoolEntry> = (1..=15).map(|a| PoolEntry::Counted { agent: vec![a], count: 8 }).collect();
    pool.push(PoolEntry::Agent(vec![16]));
    pool
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = EvoParams::default();
        ExperimentConfig {
            mutation_rate: p.mutation_rate,
            crossover_rate: p.crossover_rate,
            size_coefficient: p.size_coefficient,
            size_min: p.size_min,
            size_max: p.size_max,
            init_size: p.init_size,
            init_len_max: p.init_len_max,
            a_max: p.limits.a_max,
            l_agent: p.limits.l_agent,
            l_hard: p.limits.l_hard,
            mutation_kinds: MutationKindsConfig::All,
            request: (1..=16).collect(),
            pool: default_pool(),
            runs: 500,
            generations: 500,
            seed: 0,
            d_cap: evostab_core::macrostate::DEFAULT_D_CAP,
            window: 1,
            sweep: SweepConfig::default(),
            micro: MicroOracleConfig::default(),
            ecosystem: EcosystemConfig::default(),
            out: None,
        }
    }
}

fn core_err(field: &str) -> impl Fn(evostab_core::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{field}: {e}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The limit window, shortened to the series length when needed.
    pub fn effective_window(&self) -> usize {
        self.window.min(self.generations + 1)
    }

    pub fn limits(&self) -> GenomeLimits {
        GenomeLimits { a_max: self.a_max, l_agent: self.l_agent, l_hard: self.l_hard }
    }

    pub fn evo_params(&self) -> CliResult<EvoParams> {
        let p = EvoParams {
            mutation_rate: self.mutation_rate,
            crossover_rate: self.crossover_rate,
            size_coefficient: self.size_coefficient,
            size_min: self.size_min,
            size_max: self.size_max,
            init_size: self.init_size,
            init_len_max: self.init_len_max,
            limits: self.limits(),
            mutation_kinds: match self.mutation_kinds {
                MutationKindsConfig::All => MutationKinds::All,
                MutationKindsConfig::ReplacementOnly => MutationKinds::ReplacementOnly,
            },
        };
        p.validate().map_err(core_err("evolution parameters"))?;
        Ok(p)
    }

    pub fn user_request(&self) -> CliResult<UserRequest> {
        UserRequest::new(&self.request, self.a_max).map_err(core_err("request"))
    }

    pub fn agent_pool(&self) -> CliResult<AgentPool> {
        parse_pool(&self.pool, &self.limits(), "pool")
    }

    pub fn partition(&self) -> CliResult<MacroStatePartition> {
        MacroStatePartition::new(self.d_cap).map_err(core_err("d_cap"))
    }

    /// Checks everything the ensemble commands need.
    pub fn validate(&self) -> CliResult<()> {
        if self.runs == 0 {
            return Err(CliError::Config("runs: must be at least 1".into()));
        }
        if self.generations == 0 {
            return Err(CliError::Config("generations: must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(CliError::Config("window: must be at least 1".into()));
        }
        self.evo_params()?;
        self.user_request()?;
        self.agent_pool()?;
        self.partition()?;
        Ok(())
    }

    pub fn micro_config(&self) -> CliResult<(MicroConfig, UserRequest)> {
        let limits = self.limits();
        let pool = parse_pool(
            &self.micro.pool.iter().cloned().map(PoolEntry::Agent).collect::<Vec<_>>(),
            &limits,
            "micro.pool",
        )?
        .agents()
        .to_vec();
        let mut cfg = MicroConfig { pool, start: None };
        cfg.validate().map_err(core_err("micro.pool"))?;
        if let Some(slots) = &self.micro.start {
            let distinct = cfg.distinct_agents();
            let mut start = [MicroGenotype::Dead; 2];
            for (slot, values) in start.iter_mut().zip(slots) {
                if values.is_empty() {
                    continue;
                }
                let agent = Agent::new(values, &limits).map_err(core_err("micro.start"))?;
                let i = distinct
                    .iter()
                    .position(|a| *a == agent)
                    .ok_or_else(|| CliError::Config("micro.start: agent not in micro pool".into()))?;
                *slot = MicroGenotype::Agent(i);
            }
            cfg.start = Some(start);
        }
        let r = UserRequest::new(&self.micro.request, self.a_max).map_err(core_err("micro.request"))?;
        if !(0.0..=1.0).contains(&self.micro.mutation_rate) {
            return Err(CliError::Config("micro.mutation_rate: must lie in [0, 1]".into()));
        }
        if self.micro.runs == 0 {
            return Err(CliError::Config("micro.runs: must be at least 1".into()));
        }
        Ok((cfg, r))
    }
}

pub fn parse_pool(entries: &[PoolEntry], limits: &GenomeLimits, field: &str) -> CliResult<AgentPool> {
    let mut agents = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        let (values, count) = match e {
            PoolEntry::Agent(v) => (v, 1),
            PoolEntry::Counted { agent, count } => (agent, *count),
        };
        let agent = Agent::new(values, limits).map_err(|e| CliError::Config(format!("{field}[{i}]: {e}")))?;
        agents.extend(std::iter::repeat_n(agent, count));
    }
    AgentPool::new(agents).map_err(core_err(field))
}
