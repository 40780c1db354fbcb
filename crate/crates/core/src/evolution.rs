//! Generational evolutionary engine.
//!
//! One generation is selection, then crossover, then mutation. Random draws
//! are consumed from the caller's stream in exactly that order:
//!
//! * selection: one `f64` per sampled slot (one index draw per slot when every
//!   weight is zero);
//! * crossover: a partial Fisher-Yates shuffle choosing the recombined
//!   members, then two cut points per pair;
//! * mutation: a partial Fisher-Yates shuffle choosing the mutated members,
//!   then per member the kind (unless forced), the position and the pool
//!   agent.

use alloc::vec::Vec;

use rand::Rng;

use crate::genome::{
    parsimony, raw_fitness, total_distance, Agent, AgentAggregation, GenomeLimits, UserRequest,
};
use crate::macrostate::{MacroLabel, MacroStatePartition};
use crate::{Error, Result};

/// Which point mutations are allowed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MutationKinds {
    /// Insertion, replacement and deletion with equal probability.
    #[default]
    All,
    /// Replacement only (dead members still receive an insertion).
    ReplacementOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mutation {
    Insertion,
    Replacement,
    Deletion,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvoParams {
    /// Fraction of the population receiving one point mutation per generation.
    pub mutation_rate: f64,
    /// Fraction of the population recombined per generation.
    pub crossover_rate: f64,
    /// Population size per unit of mean aggregation length.
    pub size_coefficient: f64,
    pub size_min: usize,
    pub size_max: usize,
    pub init_size: usize,
    pub init_len_max: usize,
    pub limits: GenomeLimits,
    pub mutation_kinds: MutationKinds,
}

impl Default for EvoParams {
    fn default() -> Self {
        EvoParams {
            mutation_rate: 0.1,
            crossover_rate: 0.1,
            size_coefficient: 10.0,
            size_min: 20,
            size_max: 200,
            init_size: 20,
            init_len_max: 3,
            limits: GenomeLimits::default(),
            mutation_kinds: MutationKinds::All,
        }
    }
}

impl EvoParams {
    pub fn validate(&self) -> Result<()> {
        self.limits.validate()?;
        for (name, rate) in [("mutation_rate", self.mutation_rate), ("crossover_rate", self.crossover_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidInput(alloc::format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.size_coefficient > 0.0) || !self.size_coefficient.is_finite() {
            return Err(Error::invalid("size_coefficient must be positive"));
        }
        if self.size_min == 0 {
            return Err(Error::invalid("size_min must be at least 1"));
        }
        if !(self.size_min <= self.init_size && self.init_size <= self.size_max) {
            return Err(Error::invalid("require size_min <= init_size <= size_max"));
        }
        if self.init_len_max == 0 || self.init_len_max > self.limits.l_hard {
            return Err(Error::invalid("init_len_max must lie in 1..=l_hard"));
        }
        Ok(())
    }
}

/// Number of members touched by an operator applied at `rate`.
fn fraction_of(rate: f64, size: usize) -> usize {
    // 0.3 * 10 is 3.0000000000000004; anything within 1e-9 of an integer counts as it.
    let k = libm::floor(rate * size as f64 + 1e-9) as usize;
    k.min(size)
}

/// Agents available for seeding, insertion and replacement.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentPool {
    agents: Vec<Agent>,
}

impl AgentPool {
    pub fn new(agents: Vec<Agent>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::invalid("agent pool must not be empty"));
        }
        Ok(AgentPool { agents })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn extend(&mut self, agents: impl IntoIterator<Item = Agent>) {
        self.agents.extend(agents);
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Agent {
        self.agents[rng.gen_range(0..self.agents.len())].clone()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub members: Vec<AgentAggregation>,
    pub generation: u64,
}

impl Population {
    pub fn new(members: Vec<AgentAggregation>) -> Self {
        Population { members, generation: 0 }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Mean length over non-dead members, `None` when all are dead.
    pub fn mean_live_length(&self) -> Option<f64> {
        let (n, total) = self
            .members
            .iter()
            .filter(|m| !m.is_dead())
            .fold((0usize, 0usize), |(n, t), m| (n + 1, t + m.len()));
        (n > 0).then(|| total as f64 / n as f64)
    }

    /// Smallest total distance present; `None` when all are dead.
    pub fn best_distance(&self, r: &UserRequest) -> Option<u32> {
        self.members.iter().filter_map(|m| total_distance(m, r)).min()
    }

    /// First member with the highest raw fitness.
    pub fn best_member(&self, r: &UserRequest) -> Option<&AgentAggregation> {
        let mut best: Option<(&AgentAggregation, f64)> = None;
        for m in &self.members {
            let f = raw_fitness(m, r);
            if best.is_none_or(|(_, bf)| f > bf) {
                best = Some((m, f));
            }
        }
        best.map(|(m, _)| m)
    }
}

pub fn init_population<R: Rng + ?Sized>(
    pool: &AgentPool,
    p: &EvoParams,
    rng: &mut R,
) -> Result<Population> {
    if pool.is_empty() {
        return Err(Error::invalid("agent pool must not be empty"));
    }
    let members = (0..p.init_size)
        .map(|_| {
            let len = rng.gen_range(1..=p.init_len_max);
            (0..len).map(|_| pool.sample(rng)).collect()
        })
        .collect();
    Ok(Population::new(members))
}

/// `clamp(round(c * mean live length), size_min, size_max)`.
pub fn target_size(pop: &Population, p: &EvoParams) -> usize {
    match pop.mean_live_length() {
        Some(mean) => {
            let raw = libm::round(p.size_coefficient * mean);
            let size = if raw < 0.0 { 0 } else { raw as usize };
            size.clamp(p.size_min, p.size_max)
        }
        None => p.size_min,
    }
}

/// Fitness-proportional, non-elitist resampling to `target_size` members,
/// weighted by parsimony-adjusted fitness.
pub fn select<R: Rng + ?Sized>(
    pop: &Population,
    r: &UserRequest,
    p: &EvoParams,
    rng: &mut R,
) -> Result<Population> {
    if pop.is_empty() {
        return Err(Error::Precondition("cannot select from an empty population".into()));
    }
    let size = target_size(pop, p);
    let avg_len = pop.mean_live_length();
    let mut cumulative = Vec::with_capacity(pop.len());
    let mut total = 0.0;
    for m in &pop.members {
        let w = match avg_len {
            Some(avg) => parsimony(raw_fitness(m, r), m.len(), avg),
            None => 0.0,
        };
        total += w;
        cumulative.push(total);
    }
    let members = if total > 0.0 {
        (0..size)
            .map(|_| {
                let u = rng.gen::<f64>() * total;
                let i = cumulative.partition_point(|&c| c <= u).min(pop.len() - 1);
                pop.members[i].clone()
            })
            .collect()
    } else {
        (0..size).map(|_| pop.members[rng.gen_range(0..pop.len())].clone()).collect()
    };
    Ok(Population { members, generation: pop.generation })
}

/// First `k` entries of a uniformly random permutation of `0..n`.
fn choose_indices<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

/// Variable-length one-point crossover: `a[..cut_a] ++ b[cut_b..]` and
/// `b[..cut_b] ++ a[cut_a..]`, each truncated to `l_hard`.
pub fn one_point_crossover(
    a: &AgentAggregation,
    b: &AgentAggregation,
    cut_a: usize,
    cut_b: usize,
    l_hard: usize,
) -> (AgentAggregation, AgentAggregation) {
    let (ah, at) = a.agents().split_at(cut_a);
    let (bh, bt) = b.agents().split_at(cut_b);
    let join = |head: &[Agent], tail: &[Agent]| -> AgentAggregation {
        head.iter().chain(tail).take(l_hard).cloned().collect()
    };
    (join(ah, bt), join(bh, at))
}

pub fn crossover_step<R: Rng + ?Sized>(mut pop: Population, p: &EvoParams, rng: &mut R) -> Population {
    let k = fraction_of(p.crossover_rate, pop.len()) & !1;
    if k == 0 {
        return pop;
    }
    let chosen = choose_indices(pop.len(), k, rng);
    for pair in chosen.chunks_exact(2) {
        let (i, j) = (pair[0], pair[1]);
        let cut_i = rng.gen_range(0..=pop.members[i].len());
        let cut_j = rng.gen_range(0..=pop.members[j].len());
        let (x, y) =
            one_point_crossover(&pop.members[i], &pop.members[j], cut_i, cut_j, p.limits.l_hard);
        pop.members[i] = x;
        pop.members[j] = y;
    }
    pop
}

fn point_mutation<R: Rng + ?Sized>(
    member: &mut AgentAggregation,
    pool: &AgentPool,
    p: &EvoParams,
    rng: &mut R,
) {
    let kind = if member.is_dead() {
        Mutation::Insertion
    } else {
        match p.mutation_kinds {
            MutationKinds::ReplacementOnly => Mutation::Replacement,
            MutationKinds::All => match rng.gen_range(0..3) {
                0 => Mutation::Insertion,
                1 => Mutation::Replacement,
                _ => Mutation::Deletion,
            },
        }
    };
    let agents = member.agents_mut();
    match kind {
        Mutation::Insertion => {
            let pos = rng.gen_range(0..=agents.len());
            let agent = pool.sample(rng);
            if agents.len() < p.limits.l_hard {
                agents.insert(pos, agent);
            }
        }
        Mutation::Replacement => {
            let pos = rng.gen_range(0..agents.len());
            agents[pos] = pool.sample(rng);
        }
        Mutation::Deletion => {
            let pos = rng.gen_range(0..agents.len());
            agents.remove(pos);
        }
    }
}

pub fn mutation_step<R: Rng + ?Sized>(
    mut pop: Population,
    pool: &AgentPool,
    p: &EvoParams,
    rng: &mut R,
) -> Population {
    let k = fraction_of(p.mutation_rate, pop.len());
    if k == 0 {
        return pop;
    }
    for i in choose_indices(pop.len(), k, rng) {
        point_mutation(&mut pop.members[i], pool, p, rng);
    }
    pop
}

/// One draw from the population transition kernel.
pub fn step_generation<R: Rng + ?Sized>(
    pop: &Population,
    r: &UserRequest,
    pool: &AgentPool,
    p: &EvoParams,
    rng: &mut R,
) -> Result<Population> {
    let selected = select(pop, r, p, rng)?;
    let crossed = crossover_step(selected, p, rng);
    let mut next = mutation_step(crossed, pool, p, rng);
    next.generation = pop.generation + 1;
    Ok(next)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationRecord {
    pub generation: u64,
    pub max_fitness: f64,
    pub mean_fitness: f64,
    /// Mean length of the non-dead members (0 when all are dead).
    pub mean_length: f64,
    pub pop_size: usize,
    pub macro_state: MacroLabel,
}

impl GenerationRecord {
    pub fn of(pop: &Population, r: &UserRequest, part: &MacroStatePartition) -> Self {
        let (max, sum) = pop.members.iter().map(|m| raw_fitness(m, r)).fold((0.0f64, 0.0), |(mx, s), f| (mx.max(f), s + f));
        GenerationRecord {
            generation: pop.generation,
            max_fitness: max,
            mean_fitness: if pop.is_empty() { 0.0 } else { sum / pop.len() as f64 },
            mean_length: pop.mean_live_length().unwrap_or(0.0),
            pop_size: pop.len(),
            macro_state: part.label_of_distance(pop.best_distance(r)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrajectory {
    /// One record per generation, starting with the initial population.
    pub records: Vec<GenerationRecord>,
    pub final_population: Population,
}

impl RunTrajectory {
    pub fn labels(&self) -> impl ExactSizeIterator<Item = MacroLabel> + '_ {
        self.records.iter().map(|r| r.macro_state)
    }
}

/// Evolves a population for `generations` steps on the given stream.
pub fn run_with_rng<R: Rng + ?Sized>(
    r: &UserRequest,
    pool: &AgentPool,
    p: &EvoParams,
    part: &MacroStatePartition,
    generations: usize,
    rng: &mut R,
) -> Result<RunTrajectory> {
    let initial = init_population(pool, p, rng)?;
    run_from(initial, r, pool, p, part, generations, rng)
}

/// Evolves a given starting population.
pub fn run_from<R: Rng + ?Sized>(
    initial: Population,
    r: &UserRequest,
    pool: &AgentPool,
    p: &EvoParams,
    part: &MacroStatePartition,
    generations: usize,
    rng: &mut R,
) -> Result<RunTrajectory> {
    if generations == 0 {
        return Err(Error::invalid("generations must be at least 1"));
    }
    p.validate()?;
    let mut pop = initial;
    let mut records = Vec::with_capacity(generations + 1);
    records.push(GenerationRecord::of(&pop, r, part));
    for _ in 0..generations {
        pop = step_generation(&pop, r, pool, p, rng)?;
        records.push(GenerationRecord::of(&pop, r, part));
    }
    Ok(RunTrajectory { records, final_population: pop })
}

/// A complete run on stream 0 of `seed`.
pub fn run(
    r: &UserRequest,
    pool: &AgentPool,
    p: &EvoParams,
    part: &MacroStatePartition,
    generations: usize,
    seed: u64,
) -> Result<RunTrajectory> {
    run_with_rng(r, pool, p, part, generations, &mut crate::rng::stream(seed, 0))
}
