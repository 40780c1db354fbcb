//! Simulated habitat network.
//!
//! Habitats hold an agent pool and an archive of previously evolved
//! aggregations. A user request instantiates a population in one habitat;
//! the evolved result may migrate to neighbours, and connection weights are
//! reinforced or decayed by whether the migrant turned out to be useful.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::evolution::{run_with_rng, AgentPool, EvoParams, RunTrajectory};
use crate::genome::{raw_fitness, AgentAggregation, UserRequest};
use crate::macrostate::MacroStatePartition;
use crate::rng::{stream2, StreamRng};
use crate::{Error, Result};

pub const DEFAULT_ARCHIVE_CAPACITY: usize = 50;
pub const DEFAULT_ETA: f64 = 0.1;
pub const DEFAULT_THETA: f64 = 0.5;
pub const DEFAULT_INITIAL_WEIGHT: f64 = 0.5;

pub type HabitatIndex = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct Habitat {
    pub id: String,
    pub cluster: Option<String>,
    pub pool: AgentPool,
    archive: VecDeque<AgentAggregation>,
    archive_capacity: usize,
}

impl Habitat {
    pub fn new(id: impl Into<String>, pool: AgentPool, cluster: Option<String>) -> Self {
        Habitat {
            id: id.into(),
            cluster,
            pool,
            archive: VecDeque::new(),
            archive_capacity: DEFAULT_ARCHIVE_CAPACITY,
        }
    }

    pub fn with_archive_capacity(mut self, capacity: usize) -> Self {
        self.archive_capacity = capacity;
        self.archive.truncate(capacity);
        self
    }

    pub fn archive(&self) -> impl Iterator<Item = &AgentAggregation> {
        self.archive.iter()
    }

    /// Stores an aggregation, evicting the oldest once at capacity.
    pub fn archive_push(&mut self, a: AgentAggregation) {
        if self.archive_capacity == 0 {
            return;
        }
        if self.archive.len() == self.archive_capacity {
            self.archive.pop_front();
        }
        self.archive.push_back(a);
    }

    /// The pool plus every agent of every archived aggregation.
    pub fn seeding_pool(&self) -> AgentPool {
        let mut pool = self.pool.clone();
        pool.extend(self.archive.iter().flat_map(|a| a.agents().iter().cloned()));
        pool
    }
}

/// Habitats joined by bi-directional connections carrying an independent
/// migration probability in each direction.
#[derive(Clone, Debug, PartialEq)]
pub struct HabitatNetwork {
    habitats: Vec<Habitat>,
    weights: BTreeMap<(HabitatIndex, HabitatIndex), f64>,
    eta: f64,
}

impl HabitatNetwork {
    pub fn new(habitats: Vec<Habitat>, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::invalid("learning rate must lie in (0, 1)"));
        }
        for (i, h) in habitats.iter().enumerate() {
            if habitats[..i].iter().any(|o| o.id == h.id) {
                return Err(Error::InvalidInput(alloc::format!("duplicate habitat id {}", h.id)));
            }
        }
        Ok(HabitatNetwork { habitats, weights: BTreeMap::new(), eta })
    }

    /// Connects `a` and `b` in both directions with weight `w0` each.
    pub fn connect(&mut self, a: HabitatIndex, b: HabitatIndex, w0: f64) -> Result<()> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(Error::invalid("a habitat cannot connect to itself"));
        }
        if !(0.0..=1.0).contains(&w0) {
            return Err(Error::invalid("connection weights lie in [0, 1]"));
        }
        self.weights.insert((a, b), w0);
        self.weights.insert((b, a), w0);
        Ok(())
    }

    fn check(&self, h: HabitatIndex) -> Result<()> {
        if h < self.habitats.len() {
            Ok(())
        } else {
            Err(Error::InvalidInput(alloc::format!("unknown habitat {h}")))
        }
    }

    pub fn index_of(&self, id: &str) -> Option<HabitatIndex> {
        self.habitats.iter().position(|h| h.id == id)
    }

    pub fn habitats(&self) -> &[Habitat] {
        &self.habitats
    }

    pub fn habitat(&self, h: HabitatIndex) -> Option<&Habitat> {
        self.habitats.get(h)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn weight(&self, from: HabitatIndex, to: HabitatIndex) -> Option<f64> {
        self.weights.get(&(from, to)).copied()
    }

    /// Directed weights in `(from, to)` order.
    pub fn weights(&self) -> impl Iterator<Item = (HabitatIndex, HabitatIndex, f64)> + '_ {
        self.weights.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn neighbours(&self, h: HabitatIndex) -> impl Iterator<Item = (HabitatIndex, f64)> + '_ {
        self.weights.range((h, 0)..=(h, usize::MAX)).map(|(&(_, to), &w)| (to, w))
    }

    /// Mean directed weight within clusters and across them.
    pub fn cluster_means(&self) -> (Option<f64>, Option<f64>) {
        let (mut intra, mut inter) = ((0.0, 0usize), (0.0, 0usize));
        for (a, b, w) in self.weights() {
            let (ca, cb) = (&self.habitats[a].cluster, &self.habitats[b].cluster);
            match (ca, cb) {
                (Some(x), Some(y)) if x == y => intra = (intra.0 + w, intra.1 + 1),
                (Some(_), Some(_)) => inter = (inter.0 + w, inter.1 + 1),
                _ => {}
            }
        }
        let mean = |(s, n): (f64, usize)| (n > 0).then(|| s / n as f64);
        (mean(intra), mean(inter))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MigrationOutcome {
    Pending,
    Success,
    Failure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MigrationEvent {
    pub aggregation: AgentAggregation,
    pub from: HabitatIndex,
    pub to: HabitatIndex,
    pub epoch: u32,
    pub outcome: MigrationOutcome,
}

/// Result of evolving a population in one habitat.
#[derive(Clone, Debug, PartialEq)]
pub struct HabitatRun {
    pub best: AgentAggregation,
    pub trajectory: RunTrajectory,
}

/// Evolves a population for `r` seeded from habitat `h`'s pool and archive.
/// Does not touch the network.
pub fn evolve_in_habitat<R: Rng + ?Sized>(
    net: &HabitatNetwork,
    h: HabitatIndex,
    r: &UserRequest,
    p: &EvoParams,
    part: &MacroStatePartition,
    generations: usize,
    rng: &mut R,
) -> Result<HabitatRun> {
    net.check(h)?;
    let pool = net.habitats[h].seeding_pool();
    let trajectory = run_with_rng(r, &pool, p, part, generations, rng)?;
    let best = trajectory
        .final_population
        .best_member(r)
        .cloned()
        .unwrap_or_default();
    Ok(HabitatRun { best, trajectory })
}

/// Archives `best` in `h` and emits a pending migration to each neighbour
/// with probability equal to the directed weight.
pub fn publish<R: Rng + ?Sized>(
    net: &mut HabitatNetwork,
    h: HabitatIndex,
    best: &AgentAggregation,
    epoch: u32,
    rng: &mut R,
) -> Result<Vec<MigrationEvent>> {
    net.check(h)?;
    net.habitats[h].archive_push(best.clone());
    let neighbours: Vec<_> = net.neighbours(h).collect();
    let mut events = Vec::new();
    for (to, w) in neighbours {
        if rng.gen::<f64>() < w {
            events.push(MigrationEvent {
                aggregation: best.clone(),
                from: h,
                to,
                epoch,
                outcome: MigrationOutcome::Pending,
            });
        }
    }
    Ok(events)
}

/// Serves one request in habitat `h`: evolve, archive the best, emit
/// migrations.
#[allow(clippy::too_many_arguments)]
pub fn handle_request<R: Rng + ?Sized>(
    net: &mut HabitatNetwork,
    h: HabitatIndex,
    r: &UserRequest,
    p: &EvoParams,
    part: &MacroStatePartition,
    generations: usize,
    epoch: u32,
    rng: &mut R,
) -> Result<(HabitatRun, Vec<MigrationEvent>)> {
    let run = evolve_in_habitat(net, h, r, p, part, generations, rng)?;
    let events = publish(net, h, &run.best, epoch, rng)?;
    Ok((run, events))
}

/// Settles a pending migration: success iff the migrant's raw fitness on the
/// destination's next request reaches `theta`. A successful migrant joins
/// the destination archive and its agents join the destination pool.
pub fn judge_migration(
    net: &mut HabitatNetwork,
    e: &mut MigrationEvent,
    r_next: &UserRequest,
    theta: f64,
) -> Result<MigrationOutcome> {
    if e.outcome != MigrationOutcome::Pending {
        return Err(Error::InvalidState("migration already judged".into()));
    }
    net.check(e.to)?;
    let success = raw_fitness(&e.aggregation, r_next) >= theta;
    if success {
        let dest = &mut net.habitats[e.to];
        dest.pool.extend(e.aggregation.agents().iter().cloned());
        dest.archive_push(e.aggregation.clone());
        e.outcome = MigrationOutcome::Success;
    } else {
        e.outcome = MigrationOutcome::Failure;
    }
    Ok(e.outcome)
}

/// `w + η(1 − w)` on success, `w(1 − η)` on failure.
pub fn hebbian_update(
    net: &mut HabitatNetwork,
    from: HabitatIndex,
    to: HabitatIndex,
    success: bool,
) -> Result<f64> {
    let eta = net.eta;
    let w = net
        .weights
        .get_mut(&(from, to))
        .ok_or_else(|| Error::InvalidInput(alloc::format!("no connection {from} -> {to}")))?;
    *w = hebbian_step(*w, eta, success);
    Ok(*w)
}

#[inline]
pub fn hebbian_step(w: f64, eta: f64, success: bool) -> f64 {
    let next = if success { w + eta * (1.0 - w) } else { w * (1.0 - eta) };
    next.clamp(0.0, 1.0)
}

/// Source of user requests per habitat and epoch.
pub trait Workload {
    fn request(&self, habitat: HabitatIndex, epoch: u32, rng: &mut dyn RngCore) -> UserRequest;
}

/// Each habitat draws uniformly from its own list of requests.
#[derive(Clone, Debug, PartialEq)]
pub struct RequestMenu {
    pub per_habitat: Vec<Vec<UserRequest>>,
}

impl RequestMenu {
    pub fn new(per_habitat: Vec<Vec<UserRequest>>) -> Result<Self> {
        if per_habitat.iter().any(|m| m.is_empty()) {
            return Err(Error::invalid("every habitat needs at least one request"));
        }
        Ok(RequestMenu { per_habitat })
    }
}

impl Workload for RequestMenu {
    fn request(&self, habitat: HabitatIndex, _epoch: u32, rng: &mut dyn RngCore) -> UserRequest {
        let menu = &self.per_habitat[habitat];
        menu[rng.gen_range(0..menu.len())].clone()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EcosystemParams {
    pub evo: EvoParams,
    pub partition: MacroStatePartition,
    /// Generations per request.
    pub generations: usize,
    pub epochs: u32,
    pub theta: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: u32,
    /// Directed weights after this epoch's updates.
    pub weights: Vec<(HabitatIndex, HabitatIndex, f64)>,
    pub mean_intra_weight: Option<f64>,
    pub mean_inter_weight: Option<f64>,
    /// Raw fitness of each habitat's best result on its own request.
    pub best_fitness: Vec<f64>,
    pub migrations: usize,
    pub successes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EcosystemMetrics {
    pub epochs: Vec<EpochMetrics>,
}

impl EcosystemMetrics {
    /// Per-habitat best fitness averaged over all epochs.
    pub fn mean_best_fitness(&self) -> Vec<f64> {
        let Some(first) = self.epochs.first() else { return Vec::new() };
        let mut acc = alloc::vec![0.0; first.best_fitness.len()];
        for e in &self.epochs {
            acc.iter_mut().zip(&e.best_fitness).for_each(|(a, f)| *a += f);
        }
        acc.iter_mut().for_each(|a| *a /= self.epochs.len() as f64);
        acc
    }
}

/// Stream for the per-habitat evolution of `habitat` in `epoch`.
pub fn habitat_stream(seed: u64, epoch: u32, habitat: HabitatIndex) -> StreamRng {
    stream2(seed, epoch, habitat as u32)
}

fn control_stream(seed: u64) -> StreamRng {
    crate::rng::stream(seed, u64::MAX)
}

/// Runs the ecosystem sequentially.
pub fn simulate_ecosystem<W: Workload + ?Sized>(
    net: &mut HabitatNetwork,
    workload: &W,
    params: &EcosystemParams,
) -> Result<EcosystemMetrics> {
    simulate_ecosystem_with(net, workload, params, |n, job| (0..n).map(job).collect())
}

/// Runs the ecosystem, handing each epoch's per-habitat evolutions to `map`.
///
/// `map(n, job)` must return `job(0), …, job(n-1)` in index order; it may run
/// them concurrently. Each job draws from its own `(seed, epoch, habitat)`
/// stream, so the result does not depend on how `map` schedules them.
pub fn simulate_ecosystem_with<W, M>(
    net: &mut HabitatNetwork,
    workload: &W,
    params: &EcosystemParams,
    map: M,
) -> Result<EcosystemMetrics>
where
    W: Workload + ?Sized,
    M: Fn(usize, &(dyn Fn(usize) -> Result<HabitatRun> + Sync)) -> Vec<Result<HabitatRun>>,
{
    if params.epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    params.evo.validate()?;
    let n = net.habitats.len();
    let mut control = control_stream(params.seed);
    let mut requests: Vec<UserRequest> = (0..n).map(|h| workload.request(h, 0, &mut control)).collect();
    let mut out = Vec::with_capacity(params.epochs as usize);
    for epoch in 0..params.epochs {
        let runs = {
            let snapshot: &HabitatNetwork = net;
            let reqs = &requests;
            let job = |h: usize| {
                let mut rng = habitat_stream(params.seed, epoch, h);
                evolve_in_habitat(snapshot, h, &reqs[h], &params.evo, &params.partition, params.generations, &mut rng)
            };
            map(n, &job)
        };
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        if runs.len() != n {
            return Err(Error::InvalidState("epoch runner returned the wrong number of runs".into()));
        }

        let mut events = Vec::new();
        let mut best_fitness = Vec::with_capacity(n);
        for (h, run) in runs.iter().enumerate() {
            best_fitness.push(raw_fitness(&run.best, &requests[h]));
            events.extend(publish(net, h, &run.best, epoch, &mut control)?);
        }

        let next: Vec<UserRequest> = (0..n).map(|h| workload.request(h, epoch + 1, &mut control)).collect();
        let mut successes = 0;
        for e in &mut events {
            let outcome = judge_migration(net, e, &next[e.to], params.theta)?;
            let ok = outcome == MigrationOutcome::Success;
            successes += usize::from(ok);
            hebbian_update(net, e.from, e.to, ok)?;
        }
        let (mean_intra_weight, mean_inter_weight) = net.cluster_means();
        out.push(EpochMetrics {
            epoch,
            weights: net.weights().collect(),
            mean_intra_weight,
            mean_inter_weight,
            best_fitness,
            migrations: events.len(),
            successes,
        });
        requests = next;
    }
    Ok(EcosystemMetrics { epochs: out })
}
