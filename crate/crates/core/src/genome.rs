//! Agents, agent aggregations, user requests and fitness.
//!
//! An agent is a small set of integer attributes; an aggregation is an
//! ordered sequence of agents and is the unit of selection. The empty
//! aggregation is the dead state: it is absent from the population in every
//! respect except that it still occupies a slot.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

pub const DEFAULT_A_MAX: u16 = 16;
pub const DEFAULT_L_AGENT: usize = 2;
pub const DEFAULT_L_HARD: usize = 64;

/// Bounds on the genotype space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenomeLimits {
    /// Largest attribute value; attributes live in `1..=a_max`.
    pub a_max: u16,
    /// Maximum number of attributes per agent.
    pub l_agent: usize,
    /// Hard cap on aggregation length.
    pub l_hard: usize,
}

impl Default for GenomeLimits {
    fn default() -> Self {
        GenomeLimits { a_max: DEFAULT_A_MAX, l_agent: DEFAULT_L_AGENT, l_hard: DEFAULT_L_HARD }
    }
}

impl GenomeLimits {
    pub fn validate(&self) -> Result<()> {
        if self.a_max < 2 {
            return Err(Error::invalid("a_max must be at least 2"));
        }
        if self.l_agent == 0 {
            return Err(Error::invalid("l_agent must be at least 1"));
        }
        if self.l_hard == 0 {
            return Err(Error::invalid("l_hard must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Attribute(u16);

impl Attribute {
    pub fn new(value: u16, a_max: u16) -> Result<Self> {
        if value == 0 || value > a_max {
            return Err(Error::InvalidInput(alloc::format!(
                "attribute {value} outside 1..={a_max}"
            )));
        }
        Ok(Attribute(value))
    }

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    #[inline]
    fn distance(self, other: Attribute) -> u32 {
        u32::from(self.0.abs_diff(other.0))
    }
}

/// Sorts and deduplicates raw values into a validated attribute set.
fn attribute_set(values: &[u16], a_max: u16) -> Result<Vec<Attribute>> {
    let mut attrs = values
        .iter()
        .map(|&v| Attribute::new(v, a_max))
        .collect::<Result<Vec<_>>>()?;
    attrs.sort_unstable();
    attrs.dedup();
    Ok(attrs)
}

/// An atomic service stand-in: a non-empty, strictly ascending attribute set.
///
/// Cloning is cheap; agents are shared between aggregations.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Agent(Arc<[Attribute]>);

impl Agent {
    /// Builds the canonical (sorted, duplicate-free) form of `values`.
    pub fn new(values: &[u16], limits: &GenomeLimits) -> Result<Self> {
        let attrs = attribute_set(values, limits.a_max)?;
        if attrs.is_empty() {
            return Err(Error::invalid("agent needs at least one attribute"));
        }
        if attrs.len() > limits.l_agent {
            return Err(Error::InvalidInput(alloc::format!(
                "agent has {} attributes, limit is {}",
                attrs.len(),
                limits.l_agent
            )));
        }
        Ok(Agent(attrs.into()))
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.0
    }

    pub fn values(&self) -> impl Iterator<Item = u16> + '_ {
        self.0.iter().map(|a| a.value())
    }
}

impl fmt::Debug for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.values()).finish()
    }
}

/// Ordered sequence of agents. Empty means dead.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AgentAggregation {
    agents: Vec<Agent>,
}

impl AgentAggregation {
    pub fn new(agents: Vec<Agent>) -> Self {
        AgentAggregation { agents }
    }

    pub fn dead() -> Self {
        AgentAggregation { agents: Vec::new() }
    }

    pub fn is_dead(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub(crate) fn agents_mut(&mut self) -> &mut Vec<Agent> {
        &mut self.agents
    }

    pub fn into_agents(self) -> Vec<Agent> {
        self.agents
    }

    fn attributes(&self) -> impl Iterator<Item = Attribute> + '_ {
        self.agents.iter().flat_map(|a| a.attributes().iter().copied())
    }
}

impl FromIterator<Agent> for AgentAggregation {
    fn from_iter<I: IntoIterator<Item = Agent>>(iter: I) -> Self {
        AgentAggregation::new(iter.into_iter().collect())
    }
}

/// A set of required attributes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UserRequest {
    required: Vec<Attribute>,
}

impl UserRequest {
    pub fn new(values: &[u16], a_max: u16) -> Result<Self> {
        let required = attribute_set(values, a_max)?;
        if required.is_empty() {
            return Err(Error::invalid("user request must not be empty"));
        }
        Ok(UserRequest { required })
    }

    pub fn required(&self) -> &[Attribute] {
        &self.required
    }

    pub fn values(&self) -> impl Iterator<Item = u16> + '_ {
        self.required.iter().map(|a| a.value())
    }
}

/// Sum over requested attributes of the distance to the closest attribute
/// carried by any agent of `a`. `None` for the dead aggregation.
pub fn total_distance(a: &AgentAggregation, r: &UserRequest) -> Option<u32> {
    if a.is_dead() {
        return None;
    }
    if let Some(total) = bitmask_distance(a, r) {
        return Some(total);
    }
    let total = r
        .required
        .iter()
        .map(|&req| a.attributes().map(|attr| req.distance(attr)).min().unwrap_or(0))
        .sum();
    Some(total)
}

/// Fast path for attributes below 128: nearest set bit on either side.
fn bitmask_distance(a: &AgentAggregation, r: &UserRequest) -> Option<u32> {
    let mut mask = 0u128;
    for attr in a.attributes() {
        if attr.0 >= 128 {
            return None;
        }
        mask |= 1u128 << attr.0;
    }
    let mut total = 0u32;
    for req in &r.required {
        let q = u32::from(req.0);
        if q >= 128 {
            return None;
        }
        let below = mask & (u128::MAX >> (127 - q));
        let above = mask >> q;
        let down = (below != 0).then(|| q - (127 - below.leading_zeros()));
        let up = (above != 0).then(|| above.trailing_zeros());
        total += match (down, up) {
            (Some(x), Some(y)) => x.min(y),
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => unreachable!("live aggregation has an attribute"),
        };
    }
    Some(total)
}

/// `1 / (1 + total distance)`; the dead aggregation scores 0.
pub fn raw_fitness(a: &AgentAggregation, r: &UserRequest) -> f64 {
    match total_distance(a, r) {
        Some(d) => fitness_of_distance(d),
        None => 0.0,
    }
}

#[inline]
pub fn fitness_of_distance(d: u32) -> f64 {
    1.0 / (1.0 + f64::from(d))
}

/// Raw fitness with the parsimony penalty: aggregations longer than the
/// population average are scaled down by `avg_len / len`.
pub fn adjusted_fitness(a: &AgentAggregation, r: &UserRequest, avg_len: f64) -> Result<f64> {
    if !(avg_len > 0.0) {
        return Err(Error::invalid("average length must be positive"));
    }
    Ok(parsimony(raw_fitness(a, r), a.len(), avg_len))
}

#[inline]
pub(crate) fn parsimony(raw: f64, len: usize, avg_len: f64) -> f64 {
    let len = len as f64;
    if len <= avg_len {
        raw
    } else {
        raw * (avg_len / len)
    }
}

/// Identity key for grouping aggregations; equal iff the agent sequences are.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AggregationKey(Vec<Agent>);

pub fn canonical_key(a: &AgentAggregation) -> AggregationKey {
    AggregationKey(a.agents.clone())
}
