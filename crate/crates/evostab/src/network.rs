//! Habitat network files and ecosystem metrics records.

use std::fmt;

use evostab_core::genome::{GenomeLimits, UserRequest};
use evostab_core::habitat::{
    EcosystemMetrics, EpochMetrics, Habitat, HabitatNetwork, RequestMenu, DEFAULT_ETA,
    DEFAULT_INITIAL_WEIGHT,
};
use serde::{Deserialize, Serialize};

use crate::config::{parse_pool, PoolEntry};
use crate::error::{CliError, CliResult};

/// Habitat ids may be written as strings or integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HabitatId {
    Name(String),
    Number(u64),
}

impl fmt::Display for HabitatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HabitatId::Name(s) => f.write_str(s),
            HabitatId::Number(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HabitatSpec {
    pub id: HabitatId,
    pub pool: Vec<PoolEntry>,
    #[serde(default)]
    pub cluster: Option<String>,
    /// Requests this habitat's users draw from, uniformly.
    pub requests: Vec<Vec<u16>>,
}

/// `[from, to]` or `[from, to, w0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdgeSpec {
    Weighted(HabitatId, HabitatId, f64),
    Plain(HabitatId, HabitatId),
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub habitats: Vec<HabitatSpec>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

impl NetworkConfig {
    /// Four habitats in two clusters with disjoint attribute ranges, fully
    /// connected at the default initial weight.
    pub fn two_clusters() -> Self {
        let habitat = |id: &str, cluster: &str, attrs: std::ops::RangeInclusive<u16>, requests: Vec<Vec<u16>>| HabitatSpec {
            id: HabitatId::Name(id.into()),
            pool: attrs.map(|a| PoolEntry::Agent(vec![a])).collect(),
            cluster: Some(cluster.into()),
            requests,
        };
        let low = || vec![vec![2, 3], vec![2, 4], vec![3, 4]];
        let high = || vec![vec![12, 13], vec![12, 14], vec![13, 14]];
        let habitats = vec![
            habitat("low-a", "low", 1..=8, low()),
            habitat("low-b", "low", 1..=8, low()),
            habitat("high-a", "high", 9..=16, high()),
            habitat("high-b", "high", 9..=16, high()),
        ];
        let mut edges = Vec::new();
        for i in 0..habitats.len() {
            for j in i + 1..habitats.len() {
                edges.push(EdgeSpec::Plain(habitats[i].id.clone(), habitats[j].id.clone()));
            }
        }
        NetworkConfig { habitats, edges, eta: DEFAULT_ETA }
    }

    pub fn build(&self, limits: &GenomeLimits, archive_capacity: usize) -> CliResult<(HabitatNetwork, RequestMenu)> {
        let mut habitats = Vec::with_capacity(self.habitats.len());
        let mut menus = Vec::with_capacity(self.habitats.len());
        for (i, h) in self.habitats.iter().enumerate() {
            let field = format!("habitats[{i}]");
            let pool = parse_pool(&h.pool, limits, &format!("{field}.pool"))?;
            habitats.push(Habitat::new(h.id.to_string(), pool, h.cluster.clone()).with_archive_capacity(archive_capacity));
            let menu = h
                .requests
                .iter()
                .map(|r| UserRequest::new(r, limits.a_max))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(format!("{field}.requests: {e}")))?;
            menus.push(menu);
        }
        let menu = RequestMenu::new(menus).map_err(|e| CliError::Config(format!("habitats: {e}")))?;
        let mut net = HabitatNetwork::new(habitats, self.eta).map_err(|e| CliError::Config(format!("network: {e}")))?;
        for (k, e) in self.edges.iter().enumerate() {
            let (a, b, w) = match e {
                EdgeSpec::Weighted(a, b, w) => (a, b, *w),
                EdgeSpec::Plain(a, b) => (a, b, DEFAULT_INITIAL_WEIGHT),
            };
            let find = |id: &HabitatId| {
                net.index_of(&id.to_string())
                    .ok_or_else(|| CliError::Config(format!("edges[{k}]: unknown habitat {id}")))
            };
            let (ia, ib) = (find(a)?, find(b)?);
            net.connect(ia, ib, w).map_err(|e| CliError::Config(format!("edges[{k}]: {e}")))?;
        }
        Ok((net, menu))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    pub weights: Vec<WeightRecord>,
    pub mean_intra_weight: Option<f64>,
    pub mean_inter_weight: Option<f64>,
    /// `(habitat id, raw fitness of its best result)` in habitat order.
    pub best_fitness: Vec<(String, f64)>,
    pub migrations: usize,
    pub successes: usize,
}

impl EpochRecord {
    pub fn of(net: &HabitatNetwork, m: &EpochMetrics) -> Self {
        let id = |h: usize| net.habitats()[h].id.clone();
        EpochRecord {
            epoch: m.epoch,
            weights: m.weights.iter().map(|&(a, b, w)| WeightRecord { from: id(a), to: id(b), weight: w }).collect(),
            mean_intra_weight: m.mean_intra_weight,
            mean_inter_weight: m.mean_inter_weight,
            best_fitness: m.best_fitness.iter().enumerate().map(|(h, &f)| (id(h), f)).collect(),
            migrations: m.migrations,
            successes: m.successes,
        }
    }
}

pub fn epoch_records(net: &HabitatNetwork, metrics: &EcosystemMetrics) -> Vec<EpochRecord> {
    metrics.epochs.iter().map(|m| EpochRecord::of(net, m)).collect()
}
