//! Finite discrete-time Markov chains.
//!
//! Measures are row vectors and act on the left of a transition matrix:
//! `(λP)_j = Σ_i λ_i p_ij`, with `i` the source state.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Tolerance used when validating that something sums to one.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Non-negative finite weights on a finite state space.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure(Vec<f64>);

impl Measure {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid("measure entries must be finite and non-negative"));
        }
        Ok(Measure(entries))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// A measure of total mass one.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution(Vec<f64>);

fn check_distribution(entries: &[f64], tol: f64) -> Result<()> {
    if entries.is_empty() {
        return Err(Error::invalid("distribution needs at least one state"));
    }
    if entries.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::invalid("distribution entries must be finite and non-negative"));
    }
    let sum: f64 = entries.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidInput(alloc::format!("distribution sums to {sum}, not 1")));
    }
    Ok(())
}

impl Distribution {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        check_distribution(&entries, SUM_TOLERANCE)?;
        Ok(Distribution(entries))
    }

    /// Validates with a caller-chosen tolerance on the total mass.
    pub fn with_tolerance(entries: Vec<f64>, tol: f64) -> Result<Self> {
        check_distribution(&entries, tol)?;
        Ok(Distribution(entries))
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::invalid("point mass outside the state space"));
        }
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        Ok(Distribution(v))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("distribution needs at least one state"));
        }
        Ok(Distribution(vec![1.0 / n as f64; n]))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_measure(&self) -> Measure {
        Measure(self.0.clone())
    }

    pub fn l1_distance(&self, other: &Distribution) -> f64 {
        l1(&self.0, &other.0)
    }
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Square matrix whose rows are distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    n: usize,
    data: Vec<f64>,
}

impl StochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            data.extend(row);
        }
        Self::from_row_major(n, data)
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("matrix needs at least one state"));
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: data.len() });
        }
        for row in data.chunks_exact(n) {
            check_distribution(row, SUM_TOLERANCE)
                .map_err(|_| Error::invalid("every row of a stochastic matrix must be a distribution"))?;
        }
        Ok(StochasticMatrix { n, data })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::from_row_major(n, data)
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    fn left_multiply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, row) in self.rows().enumerate() {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(row) {
                *o += vi * p;
            }
        }
        out
    }

    fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(j, _)| j)
    }
}

/// `λP`.
pub fn measure_times_matrix(m: &Measure, p: &StochasticMatrix) -> Result<Measure> {
    if m.len() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, found: m.len() });
    }
    Ok(Measure(p.left_multiply(&m.0)))
}

/// `λPᵗ`: the law of the chain at time `t` when started from `init`.
pub fn evolve(init: &Distribution, p: &StochasticMatrix, t: usize) -> Result<Distribution> {
    if init.len() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, found: init.len() });
    }
    let mut v = init.0.clone();
    for _ in 0..t {
        v = p.left_multiply(&v);
    }
    Ok(Distribution(v))
}

/// Every step of `evolve` from 0 to `t` inclusive.
pub fn evolve_path(init: &Distribution, p: &StochasticMatrix, t: usize) -> Result<Vec<Distribution>> {
    let mut cur = evolve(init, p, 0)?;
    let mut out = Vec::with_capacity(t + 1);
    for _ in 0..t {
        let next = Distribution(p.left_multiply(&cur.0));
        out.push(cur);
        cur = next;
    }
    out.push(cur);
    Ok(out)
}

/// Strongly connected components (Kosaraju), as a component id per state.
fn components(p: &StochasticMatrix) -> (Vec<usize>, usize) {
    let n = p.n;
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let mut pushed = false;
            while *next < n {
                let w = *next;
                *next += 1;
                if p.get(v, w) > 0.0 && !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                    pushed = true;
                    break;
                }
            }
            if !pushed {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = count;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for u in 0..n {
                if p.get(u, v) > 0.0 && comp[u] == usize::MAX {
                    comp[u] = count;
                    stack.push(u);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

/// The positive-entry graph is strongly connected.
pub fn is_irreducible(p: &StochasticMatrix) -> bool {
    components(p).1 == 1
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Every state has return times with gcd one.
///
/// Within a strongly connected component the period is the gcd of
/// `depth(u) + 1 - depth(v)` over its edges `u -> v`, with depths taken from a
/// breadth-first search. A state that can never return has no period and
/// makes the chain non-aperiodic.
pub fn is_aperiodic(p: &StochasticMatrix) -> bool {
    let n = p.n;
    let (comp, count) = components(p);
    let mut depth = vec![usize::MAX; n];
    for c in 0..count {
        let root = match comp.iter().position(|&x| x == c) {
            Some(r) => r,
            None => continue,
        };
        depth[root] = 0;
        let mut queue = alloc::collections::VecDeque::from([root]);
        let mut period = 0usize;
        while let Some(u) = queue.pop_front() {
            for v in p.successors(u) {
                if comp[v] != c {
                    continue;
                }
                if depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                } else {
                    period = gcd(period, (depth[u] + 1).abs_diff(depth[v]));
                }
            }
        }
        if period != 1 {
            return false;
        }
    }
    true
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
            .unwrap_or(col);
        if a[pivot * n + col].abs() < 1e-300 {
            return Err(Error::Precondition("singular system".into()));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    Ok(x)
}

/// The unique `λ` with `λP = λ` and `Σλ = 1`, by a direct linear solve.
pub fn invariant_distribution(p: &StochasticMatrix) -> Result<Distribution> {
    if !is_irreducible(p) {
        return Err(Error::Precondition("invariant distribution requires an irreducible matrix".into()));
    }
    let n = p.n;
    // Rows of (Pᵀ - I), last one replaced by the normalisation constraint.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = p.get(j, i) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1) * n + j] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let mut x = solve_dense(a, b, n)?;
    for v in &mut x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    Ok(Distribution(x))
}

#[derive(Clone, Debug, PartialEq)]
pub enum LimitOutcome {
    /// Successive iterates came within the tolerance after `steps` steps.
    Converged { limit: Distribution, steps: usize },
    /// `t_max` steps without convergence; carries the last iterate.
    NotConverged { last: Distribution, steps: usize },
}

impl LimitOutcome {
    pub fn converged(&self) -> Option<&Distribution> {
        match self {
            LimitOutcome::Converged { limit, .. } => Some(limit),
            LimitOutcome::NotConverged { .. } => None,
        }
    }
}

/// Power iteration from `init` until successive iterates differ by less than
/// `tol` in L1.
pub fn limit_distribution(
    init: &Distribution,
    p: &StochasticMatrix,
    tol: f64,
    t_max: usize,
) -> Result<LimitOutcome> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let mut cur = evolve(init, p, 0)?;
    for step in 1..=t_max {
        let next = p.left_multiply(&cur.0);
        let diff = l1(&next, &cur.0);
        cur = Distribution(next);
        if diff < tol {
            return Ok(LimitOutcome::Converged { limit: cur, steps: step });
        }
    }
    Ok(LimitOutcome::NotConverged { last: cur, steps: t_max })
}

/// The chain settles into a limit distribution that is not uniform.
pub fn is_stable(p: &StochasticMatrix, init: &Distribution, tol: f64, t_max: usize) -> bool {
    match limit_distribution(init, p, tol, t_max) {
        Ok(LimitOutcome::Converged { limit, .. }) => spread(limit.entries()) > tol,
        _ => false,
    }
}

pub(crate) fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}
