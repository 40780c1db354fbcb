//! Macro-states of evolving populations.
//!
//! A population state is labelled by the best raw fitness it contains. Raw
//! fitness takes the values `1/(1+d)` for an integer total distance `d`, so
//! the labels are the distances `0..=d_cap`, one pooled label for everything
//! deeper, and a label for the all-dead population. Label order (and column
//! order in every export) is by fitness, best first.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::evolution::{EvoParams, MutationKinds, Population, RunTrajectory};
use crate::genome::{raw_fitness, Agent, AgentAggregation, UserRequest};
use crate::markov::{Distribution, StochasticMatrix};
use crate::{Error, Result};

pub const DEFAULT_D_CAP: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MacroLabel {
    /// Best member has total distance `d`, i.e. fitness `1/(1+d)`.
    Level(u32),
    /// Best member is deeper than the partition tracks.
    BelowCap,
    AllDead,
}

impl MacroLabel {
    pub const MAX: MacroLabel = MacroLabel::Level(0);
    pub const HALF: MacroLabel = MacroLabel::Level(1);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MacroStatePartition {
    d_cap: u32,
}

impl Default for MacroStatePartition {
    fn default() -> Self {
        MacroStatePartition { d_cap: DEFAULT_D_CAP }
    }
}

impl MacroStatePartition {
    /// `d_cap >= 1` so that both `M_max` and `M_half` are tracked.
    pub fn new(d_cap: u32) -> Result<Self> {
        if d_cap == 0 {
            return Err(Error::invalid("d_cap must be at least 1"));
        }
        Ok(MacroStatePartition { d_cap })
    }

    pub fn d_cap(&self) -> u32 {
        self.d_cap
    }

    /// Number of labels `N`.
    pub fn n_levels(&self) -> usize {
        self.d_cap as usize + 3
    }

    pub fn index(&self, label: MacroLabel) -> usize {
        match label {
            MacroLabel::Level(d) if d <= self.d_cap => d as usize,
            MacroLabel::Level(_) | MacroLabel::BelowCap => self.d_cap as usize + 1,
            MacroLabel::AllDead => self.d_cap as usize + 2,
        }
    }

    pub fn label(&self, index: usize) -> Option<MacroLabel> {
        let cap = self.d_cap as usize;
        match index {
            i if i <= cap => Some(MacroLabel::Level(i as u32)),
            i if i == cap + 1 => Some(MacroLabel::BelowCap),
            i if i == cap + 2 => Some(MacroLabel::AllDead),
            _ => None,
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = MacroLabel> + '_ {
        (0..self.n_levels()).filter_map(|i| self.label(i))
    }

    /// Label for a best total distance (`None` = everything dead).
    pub fn label_of_distance(&self, best: Option<u32>) -> MacroLabel {
        match best {
            Some(d) if d <= self.d_cap => MacroLabel::Level(d),
            Some(_) => MacroLabel::BelowCap,
            None => MacroLabel::AllDead,
        }
    }

    /// Column name used in exports.
    pub fn name(&self, label: MacroLabel) -> String {
        match label {
            MacroLabel::Level(0) => "M_max".into(),
            MacroLabel::Level(1) => "M_half".into(),
            MacroLabel::Level(d) if d <= self.d_cap => format!("M_1/{}", d + 1),
            MacroLabel::Level(_) | MacroLabel::BelowCap => "below_cap".into(),
            MacroLabel::AllDead => "dead".into(),
        }
    }

    /// Inverse of [`Self::name`].
    pub fn parse_name(&self, name: &str) -> Option<MacroLabel> {
        self.labels().find(|&l| self.name(l) == name)
    }
}

pub fn macro_state_of(pop: &Population, r: &UserRequest, part: &MacroStatePartition) -> MacroLabel {
    part.label_of_distance(pop.best_distance(r))
}

/// Per-generation label counts over an ensemble. Merging is associative and
/// commutative, so runs can be folded in any grouping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupationCounts {
    n_levels: usize,
    counts: Vec<Vec<u64>>,
    runs: u64,
}

impl OccupationCounts {
    pub fn new(part: &MacroStatePartition, generations: usize) -> Self {
        OccupationCounts {
            n_levels: part.n_levels(),
            counts: vec![vec![0; part.n_levels()]; generations + 1],
            runs: 0,
        }
    }

    pub fn add_run(
        &mut self,
        part: &MacroStatePartition,
        labels: impl ExactSizeIterator<Item = MacroLabel>,
    ) -> Result<()> {
        if labels.len() != self.counts.len() {
            return Err(Error::InvalidInput(format!(
                "trajectory has {} generations, expected {}",
                labels.len(),
                self.counts.len()
            )));
        }
        for (row, label) in self.counts.iter_mut().zip(labels) {
            row[part.index(label)] += 1;
        }
        self.runs += 1;
        Ok(())
    }

    pub fn merge(mut self, other: &OccupationCounts) -> Result<Self> {
        if self.counts.len() != other.counts.len() || self.n_levels != other.n_levels {
            return Err(Error::invalid("cannot merge occupation counts of different shapes"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.runs += other.runs;
        Ok(self)
    }

    pub fn runs(&self) -> u64 {
        self.runs
    }

    pub fn to_series(&self) -> Result<OccupationSeries> {
        if self.runs == 0 {
            return Err(Error::invalid("no runs to estimate from"));
        }
        let n = self.runs as f64;
        let rows = self
            .counts
            .iter()
            .map(|row| Distribution::with_tolerance(row.iter().map(|&c| c as f64 / n).collect(), 1e-9))
            .collect::<Result<Vec<_>>>()?;
        Ok(OccupationSeries { rows, ensemble_size: self.runs })
    }
}

/// Empirical macro-state distribution at each generation.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationSeries {
    pub rows: Vec<Distribution>,
    pub ensemble_size: u64,
}

impl OccupationSeries {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Probability of `label` at every generation.
    pub fn column(&self, part: &MacroStatePartition, label: MacroLabel) -> Vec<f64> {
        let i = part.index(label);
        self.rows.iter().map(|r| r.entries()[i]).collect()
    }
}

/// Fraction of runs in each macro-state at each generation.
pub fn estimate_occupation(runs: &[RunTrajectory], part: &MacroStatePartition) -> Result<OccupationSeries> {
    let first = runs.first().ok_or_else(|| Error::invalid("need at least one run"))?;
    let mut counts = OccupationCounts::new(part, first.records.len().saturating_sub(1));
    for run in runs {
        counts.add_run(part, run.labels())?;
    }
    counts.to_series()
}

/// Average of the last `window` generations.
pub fn limit_occupation(series: &OccupationSeries, window: usize) -> Result<Distribution> {
    if window == 0 || window > series.len() {
        return Err(Error::invalid("window must lie in 1..=series length"));
    }
    let tail = &series.rows[series.len() - window..];
    let n = tail[0].len();
    let mut avg = vec![0.0; n];
    for row in tail {
        avg.iter_mut().zip(row.entries()).for_each(|(a, &x)| *a += x);
    }
    avg.iter_mut().for_each(|a| *a /= window as f64);
    Distribution::with_tolerance(avg, 1e-9)
}

/// Tolerance separating a non-uniform limit from a uniform one.
pub const NON_UNIFORM_TOLERANCE: f64 = 1e-9;

/// A limit distribution witnesses stability when it is non-uniform.
pub fn check_stable(limit: &Distribution) -> bool {
    crate::markov::spread(limit.entries()) > NON_UNIFORM_TOLERANCE
}

/// Entropy of `limit` in base `n_levels` (`0·log 0 = 0`), clamped to [0, 1].
pub fn degree_of_instability(limit: &Distribution, n_levels: usize) -> Result<f64> {
    if n_levels < 2 {
        return Err(Error::invalid("need at least two macro-states"));
    }
    if limit.len() > n_levels {
        return Err(Error::invalid("distribution has more states than the partition"));
    }
    let h: f64 = limit
        .entries()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * libm::log(p))
        .sum();
    let d = h / libm::log(n_levels as f64);
    Ok(if d <= 0.0 { 0.0 } else { d.min(1.0) })
}

/// Genotype of a slot in the micro model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MicroGenotype {
    /// Index into [`MicroConfig::distinct_agents`].
    Agent(usize),
    Dead,
}

/// A population small enough for its transition kernel to be written down:
/// two slots, single-agent aggregations, no crossover, replacement only.
#[derive(Clone, Debug, PartialEq)]
pub struct MicroConfig {
    /// Mutation draws; duplicates weight the draw. At most two distinct
    /// single-attribute agents.
    pub pool: Vec<Agent>,
    /// Fixed starting state, otherwise both slots are drawn from the pool.
    pub start: Option<[MicroGenotype; 2]>,
}

impl MicroConfig {
    pub const POPULATION_SIZE: usize = 2;

    pub fn validate(&self) -> Result<()> {
        if self.pool.is_empty() {
            return Err(Error::invalid("micro pool must not be empty"));
        }
        if self.pool.iter().any(|a| a.attributes().len() != 1) {
            return Err(Error::invalid("micro pool agents carry exactly one attribute"));
        }
        if self.distinct_agents().len() > 2 {
            return Err(Error::invalid("micro pool holds at most two distinct agents"));
        }
        if let Some(start) = self.start {
            let k = self.distinct_agents().len();
            if start.iter().any(|g| matches!(g, MicroGenotype::Agent(i) if *i >= k)) {
                return Err(Error::invalid("start state refers to an unknown agent"));
            }
        }
        Ok(())
    }

    pub fn distinct_agents(&self) -> Vec<Agent> {
        let mut v = self.pool.clone();
        v.sort();
        v.dedup();
        v
    }

    /// Evolution parameters realising the micro model at `mutation_rate`.
    pub fn evo_params(&self, mutation_rate: f64) -> EvoParams {
        EvoParams {
            mutation_rate,
            crossover_rate: 0.0,
            size_min: Self::POPULATION_SIZE,
            size_max: Self::POPULATION_SIZE,
            init_size: Self::POPULATION_SIZE,
            init_len_max: 1,
            mutation_kinds: MutationKinds::ReplacementOnly,
            ..EvoParams::default()
        }
    }

    fn check_params(p: &EvoParams) -> Result<()> {
        let ok = p.crossover_rate == 0.0
            && p.size_min == Self::POPULATION_SIZE
            && p.size_max == Self::POPULATION_SIZE
            && p.init_size == Self::POPULATION_SIZE
            && p.init_len_max == 1
            && p.mutation_kinds == MutationKinds::ReplacementOnly;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(
                "micro chain needs population size 2, length 1, no crossover and replacement-only mutation",
            ))
        }
    }

    /// Pool probability of each distinct agent.
    fn pool_law(&self) -> Vec<f64> {
        let distinct = self.distinct_agents();
        let n = self.pool.len() as f64;
        distinct
            .iter()
            .map(|d| self.pool.iter().filter(|a| *a == d).count() as f64 / n)
            .collect()
    }

    pub fn start_population(&self) -> Option<Population> {
        let distinct = self.distinct_agents();
        self.start.map(|slots| {
            Population::new(
                slots
                    .iter()
                    .map(|g| match *g {
                        MicroGenotype::Agent(i) => AgentAggregation::new(vec![distinct[i].clone()]),
                        MicroGenotype::Dead => AgentAggregation::dead(),
                    })
                    .collect(),
            )
        })
    }
}

/// Enumerated micro model: states are unordered slot pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct MicroChain {
    pub agents: Vec<Agent>,
    pub states: Vec<[MicroGenotype; 2]>,
    pub matrix: StochasticMatrix,
    /// Law of the starting state.
    pub initial: Distribution,
}

fn sorted_pair(a: MicroGenotype, b: MicroGenotype) -> [MicroGenotype; 2] {
    if a <= b {
        [a, b]
    } else {
        [b, a]
    }
}

impl MicroChain {
    pub fn state_index(&self, pair: [MicroGenotype; 2]) -> Option<usize> {
        let key = sorted_pair(pair[0], pair[1]);
        self.states.iter().position(|s| *s == key)
    }

    fn genotype(&self, a: &AgentAggregation) -> Option<MicroGenotype> {
        match a.agents() {
            [] => Some(MicroGenotype::Dead),
            [agent] => self.agents.iter().position(|x| x == agent).map(MicroGenotype::Agent),
            _ => None,
        }
    }

    /// State of a two-member population, `None` if it lies outside the model.
    pub fn state_of(&self, pop: &Population) -> Option<usize> {
        match pop.members.as_slice() {
            [a, b] => self.state_index([self.genotype(a)?, self.genotype(b)?]),
            _ => None,
        }
    }

    /// Draws a starting population with the law of [`MicroChain::initial`].
    pub fn initial_population<R: Rng + ?Sized>(&self, cfg: &MicroConfig, rng: &mut R) -> Population {
        match cfg.start_population() {
            Some(pop) => pop,
            None => Population::new(
                (0..MicroConfig::POPULATION_SIZE)
                    .map(|_| AgentAggregation::new(vec![cfg.pool[rng.gen_range(0..cfg.pool.len())].clone()]))
                    .collect(),
            ),
        }
    }
}

/// Exact transition kernel of the micro model: two independent
/// fitness-proportional draws, then replacement of `⌊m·2⌋` uniformly chosen
/// slots by pool draws.
pub fn enumerate_micro_chain(cfg: &MicroConfig, r: &UserRequest, p: &EvoParams) -> Result<MicroChain> {
    cfg.validate()?;
    MicroConfig::check_params(p)?;
    p.validate()?;
    let agents = cfg.distinct_agents();
    let law = cfg.pool_law();
    let mut genotypes: Vec<MicroGenotype> = (0..agents.len()).map(MicroGenotype::Agent).collect();
    genotypes.push(MicroGenotype::Dead);
    let g = genotypes.len();

    let mut states = Vec::new();
    for i in 0..g {
        for j in i..g {
            states.push(sorted_pair(genotypes[i], genotypes[j]));
        }
    }
    let n = states.len();
    let gi = |x: MicroGenotype| match x {
        MicroGenotype::Agent(i) => i,
        MicroGenotype::Dead => g - 1,
    };
    let fitness = |x: MicroGenotype| match x {
        MicroGenotype::Agent(i) => raw_fitness(&AgentAggregation::new(vec![agents[i].clone()]), r),
        MicroGenotype::Dead => 0.0,
    };
    let index_of = |a: MicroGenotype, b: MicroGenotype| {
        let key = sorted_pair(a, b);
        states.iter().position(|s| *s == key).expect("enumerated")
    };
    // Law of a mutated slot: a fresh pool agent.
    let mutated: Vec<(MicroGenotype, f64)> =
        law.iter().enumerate().map(|(i, &q)| (MicroGenotype::Agent(i), q)).collect();
    let n_mutated = {
        let k = libm::floor(p.mutation_rate * 2.0 + 1e-9) as usize;
        k.min(2)
    };

    let mut data = vec![0.0; n * n];
    for (s, &[a, b]) in states.iter().enumerate() {
        // Live slots all have length 1, so parsimony never bites.
        let (fa, fb) = (fitness(a), fitness(b));
        let total = fa + fb;
        let (pa, pb) = if total > 0.0 { (fa / total, fb / total) } else { (0.5, 0.5) };
        let mut draw = vec![0.0; g];
        draw[gi(a)] += pa;
        draw[gi(b)] += pb;
        let row = &mut data[s * n..(s + 1) * n];
        for (x, &px) in genotypes.iter().zip(&draw) {
            for (y, &py) in genotypes.iter().zip(&draw) {
                let w = px * py;
                if w == 0.0 {
                    continue;
                }
                match n_mutated {
                    0 => row[index_of(*x, *y)] += w,
                    1 => {
                        for &(m, q) in &mutated {
                            row[index_of(m, *y)] += 0.5 * w * q;
                            row[index_of(*x, m)] += 0.5 * w * q;
                        }
                    }
                    _ => {
                        for &(m1, q1) in &mutated {
                            for &(m2, q2) in &mutated {
                                row[index_of(m1, m2)] += w * q1 * q2;
                            }
                        }
                    }
                }
            }
        }
    }
    let matrix = StochasticMatrix::from_row_major(n, data)?;

    let initial = match cfg.start {
        Some([a, b]) => Distribution::point_mass(n, index_of(a, b))?,
        None => {
            let mut v = vec![0.0; n];
            for &(x, qx) in &mutated {
                for &(y, qy) in &mutated {
                    v[index_of(x, y)] += qx * qy;
                }
            }
            Distribution::new(v)?
        }
    };
    Ok(MicroChain { agents, states, matrix, initial })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{GenerationRecord, Population};
    use crate::genome::GenomeLimits;

    fn agent(v: &[u16]) -> Agent {
        Agent::new(v, &GenomeLimits::default()).unwrap()
    }

    fn req(v: &[u16]) -> UserRequest {
        UserRequest::new(v, 16).unwrap()
    }

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn partition_shape() {
        let part = MacroStatePartition::default();
        assert_eq!(part.n_levels(), 13);
        let labels: Vec<_> = part.labels().collect();
        assert_eq!(labels.len(), 13);
        assert_eq!(labels[0], MacroLabel::MAX);
        assert_eq!(labels[1], MacroLabel::HALF);
        assert_eq!(labels[11], MacroLabel::BelowCap);
        assert_eq!(labels[12], MacroLabel::AllDead);
        for (i, l) in labels.iter().enumerate() {
            assert_eq!(part.index(*l), i);
            assert_eq!(part.parse_name(&part.name(*l)), Some(*l));
        }
        assert_eq!(part.index(MacroLabel::Level(99)), 11);
        assert!(MacroStatePartition::new(0).is_err());
    }

    #[test]
    fn labels_of_populations() {
        let part = MacroStatePartition::default();
        let r = req(&[4, 9]);
        let exact = AgentAggregation::new(vec![agent(&[4, 9])]);
        let near = AgentAggregation::new(vec![agent(&[4, 10])]);
        let far = AgentAggregation::new(vec![agent(&[16])]);
        let pop = Population::new(vec![far.clone(), exact, near.clone()]);
        assert_eq!(macro_state_of(&pop, &r, &part), MacroLabel::MAX);
        let pop = Population::new(vec![far.clone(), near]);
        assert_eq!(macro_state_of(&pop, &r, &part), MacroLabel::HALF);
        // 12 + 7 = 19 > 10
        assert_eq!(macro_state_of(&Population::new(vec![far]), &r, &part), MacroLabel::BelowCap);
        let dead = Population::new(vec![AgentAggregation::dead(), AgentAggregation::dead()]);
        assert_eq!(macro_state_of(&dead, &r, &part), MacroLabel::AllDead);
    }

    fn trajectory(labels: &[MacroLabel]) -> RunTrajectory {
        let records = labels
            .iter()
            .enumerate()
            .map(|(g, &l)| GenerationRecord {
                generation: g as u64,
                max_fitness: 0.0,
                mean_fitness: 0.0,
                mean_length: 0.0,
                pop_size: 0,
                macro_state: l,
            })
            .collect();
        RunTrajectory { records, final_population: Population::new(vec![]) }
    }

    #[test]
    fn occupation_counting() {
        let part = MacroStatePartition::default();
        let one = estimate_occupation(&[trajectory(&[MacroLabel::HALF, MacroLabel::MAX])], &part).unwrap();
        for row in &one.rows {
            assert_eq!(row.entries().iter().filter(|&&x| x == 1.0).count(), 1);
        }
        let two = estimate_occupation(
            &[trajectory(&[MacroLabel::HALF, MacroLabel::MAX]), trajectory(&[MacroLabel::HALF, MacroLabel::Level(3)])],
            &part,
        )
        .unwrap();
        assert_eq!(two.rows[0].entries()[1], 1.0);
        assert_eq!(two.rows[1].entries()[0], 0.5);
        assert_eq!(two.rows[1].entries()[3], 0.5);
        assert_eq!(two.ensemble_size, 2);

        let uneven = [trajectory(&[MacroLabel::MAX]), trajectory(&[MacroLabel::MAX, MacroLabel::MAX])];
        assert!(estimate_occupation(&uneven, &part).is_err());
        assert!(estimate_occupation(&[], &part).is_err());
    }

    #[test]
    fn counts_merge_in_any_order() {
        let part = MacroStatePartition::default();
        let runs = [
            [MacroLabel::HALF, MacroLabel::MAX],
            [MacroLabel::BelowCap, MacroLabel::HALF],
            [MacroLabel::AllDead, MacroLabel::MAX],
        ];
        let single = |labels: &[MacroLabel; 2]| {
            let mut c = OccupationCounts::new(&part, 1);
            c.add_run(&part, labels.iter().copied()).unwrap();
            c
        };
        let left = single(&runs[0]).merge(&single(&runs[1])).unwrap().merge(&single(&runs[2])).unwrap();
        let right = single(&runs[2]).merge(&single(&runs[1]).merge(&single(&runs[0])).unwrap()).unwrap();
        assert_eq!(left, right);
        assert_eq!(left.runs(), 3);
    }

    #[test]
    fn limit_window() {
        let part = MacroStatePartition::default();
        let series = estimate_occupation(
            &[
                trajectory(&[MacroLabel::HALF, MacroLabel::MAX, MacroLabel::MAX]),
                trajectory(&[MacroLabel::HALF, MacroLabel::HALF, MacroLabel::MAX]),
            ],
            &part,
        )
        .unwrap();
        assert_eq!(limit_occupation(&series, 1).unwrap(), series.rows[2]);
        let two = limit_occupation(&series, 2).unwrap();
        assert!((two.entries()[0] - 0.75).abs() < 1e-15);
        assert!((two.entries()[1] - 0.25).abs() < 1e-15);
        assert!(limit_occupation(&series, 0).is_err());
        assert!(limit_occupation(&series, 4).is_err());
    }

    #[test]
    fn stability_predicate() {
        assert!(check_stable(&Distribution::point_mass(13, 0).unwrap()));
        assert!(!check_stable(&Distribution::uniform(13).unwrap()));
        assert!(check_stable(&dist(&[0.6, 0.4, 0.0, 0.0])));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(degree_of_instability(&Distribution::point_mass(13, 0).unwrap(), 13).unwrap(), 0.0);
        let u = degree_of_instability(&Distribution::uniform(13).unwrap(), 13).unwrap();
        assert!((u - 1.0).abs() <= 1e-12);
        let h = degree_of_instability(&dist(&[0.5, 0.5, 0.0, 0.0]), 4).unwrap();
        assert!((h - 0.5).abs() < 1e-15);
        assert!(degree_of_instability(&dist(&[1.0]), 1).is_err());
        assert!(degree_of_instability(&dist(&[0.5, 0.25, 0.25]), 2).is_err());
    }

    fn micro(pool: &[&[u16]]) -> MicroConfig {
        MicroConfig { pool: pool.iter().map(|v| agent(v)).collect(), start: None }
    }

    #[test]
    fn micro_bounds() {
        let r = req(&[5]);
        let cfg = micro(&[&[5], &[6]]);
        let chain = enumerate_micro_chain(&cfg, &r, &cfg.evo_params(0.5)).unwrap();
        assert_eq!(chain.states.len(), 6);
        assert!(enumerate_micro_chain(&micro(&[&[5], &[6], &[7]]), &r, &cfg.evo_params(0.5)).is_err());
        assert!(enumerate_micro_chain(&micro(&[&[5, 6]]), &r, &cfg.evo_params(0.5)).is_err());
        let mut p = cfg.evo_params(0.5);
        p.crossover_rate = 0.1;
        assert!(enumerate_micro_chain(&cfg, &r, &p).is_err());
    }

    #[test]
    fn micro_absorbing_under_selection() {
        let r = req(&[5]);
        let cfg = micro(&[&[5], &[6]]);
        let chain = enumerate_micro_chain(&cfg, &r, &cfg.evo_params(0.0)).unwrap();
        let best = chain.state_index([MicroGenotype::Agent(0), MicroGenotype::Agent(0)]).unwrap();
        assert_eq!(chain.matrix.get(best, best), 1.0);
        for row in chain.matrix.rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn micro_mixed_state_is_binomial() {
        // fitness 1 and 1/3: per-draw probability 3/4
        let r = req(&[5]);
        let cfg = micro(&[&[5], &[7]]);
        let chain = enumerate_micro_chain(&cfg, &r, &cfg.evo_params(0.0)).unwrap();
        let (a, b) = (MicroGenotype::Agent(0), MicroGenotype::Agent(1));
        let mixed = chain.state_index([a, b]).unwrap();
        let q: f64 = 0.75;
        let expect = [((a, a), q * q), ((a, b), 2.0 * q * (1.0 - q)), ((b, b), (1.0 - q) * (1.0 - q))];
        for ((x, y), pr) in expect {
            let j = chain.state_index([x, y]).unwrap();
            assert!((chain.matrix.get(mixed, j) - pr).abs() < 1e-15);
        }
    }
}
