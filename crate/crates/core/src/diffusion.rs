//! Independent Cascade diffusion: Monte Carlo simulation, an exact
//! live-edge enumeration oracle for small graphs, and the outreach and
//! fairness metrics computed from them.
//!
//! Within a cascade round the frontier is processed in ascending node order
//! and every attempt on an inactive neighbor consumes exactly one uniform
//! draw. Simulation `i` of an estimate reads stream `i` of the supplied
//! [`StreamSeed`]; per-simulation integer counts are summed before a single
//! division, so serial and parallel runs agree bit for bit.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{CommunityPartition, Graph};
use crate::rng::StreamSeed;

/// Largest edge count `exact_spread` will enumerate.
pub const MAX_ENUMERATION_EDGES: usize = 20;

const SIMS_PER_TASK: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CascadeConfig {
    pub influence_probability: f64,
    pub num_simulations: usize,
}

impl CascadeConfig {
    pub fn new(influence_probability: f64, num_simulations: usize) -> Result<Self> {
        let config = CascadeConfig {
            influence_probability,
            num_simulations,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.influence_probability) {
            return Err(Error::InvalidParameter(format!(
                "influence probability must be in [0, 1], got {}",
                self.influence_probability
            )));
        }
        if self.num_simulations == 0 {
            return Err(Error::InvalidParameter("num_simulations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Expected activated fractions, overall and per community.
#[derive(Clone, Debug, PartialEq)]
pub struct SpreadEstimate {
    pub total_outreach: f64,
    pub community_outreach: Vec<f64>,
    /// Standard deviation of the per-realization total outreach.
    pub std_total: f64,
    /// Standard deviation of each community's per-realization outreach.
    pub community_std: Vec<f64>,
}

impl SpreadEstimate {
    pub fn maximin_fairness(&self) -> f64 {
        maximin_fairness(self)
    }

    pub fn disparity(&self) -> f64 {
        disparity(self)
    }

    /// Index of the least-reached community (lowest index on ties).
    pub fn worst_community(&self) -> usize {
        let mut worst = 0;
        for (c, &x) in self.community_outreach.iter().enumerate() {
            if x < self.community_outreach[worst] {
                worst = c;
            }
        }
        worst
    }
}

fn check_seeds(graph: &Graph, seeds: &[usize]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::EmptySeedSet);
    }
    if let Some(&bad) = seeds.iter().find(|&&s| s >= graph.node_count()) {
        return Err(Error::NodeOutOfRange {
            index: bad,
            node_count: graph.node_count(),
        });
    }
    Ok(())
}

/// Reusable buffers for repeated cascades on one graph. Activation marks are
/// generation-stamped so resetting is O(1).
struct Workspace {
    mark: Vec<u32>,
    generation: u32,
    frontier: Vec<usize>,
    next: Vec<usize>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            mark: vec![0; n],
            generation: 0,
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    fn reset(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.generation = 1;
        }
    }

    fn is_active(&self, v: usize) -> bool {
        self.mark[v] == self.generation
    }

    fn activate(&mut self, v: usize) -> bool {
        if self.mark[v] == self.generation {
            false
        } else {
            self.mark[v] = self.generation;
            true
        }
    }

    /// One IC realization; calls `on_activate` for every activated node.
    fn cascade<R: Rng>(
        &mut self,
        graph: &Graph,
        seeds: &[usize],
        p: f64,
        rng: &mut R,
        mut on_activate: impl FnMut(usize),
    ) {
        self.reset();
        self.frontier.clear();
        for &s in seeds {
            if self.activate(s) {
                self.frontier.push(s);
                on_activate(s);
            }
        }
        self.frontier.sort_unstable();
        while !self.frontier.is_empty() {
            self.next.clear();
            for i in 0..self.frontier.len() {
                let u = self.frontier[i];
                for &v in graph.neighbors(u) {
                    if !self.is_active(v) && rng.random::<f64>() < p {
                        self.activate(v);
                        self.next.push(v);
                        on_activate(v);
                    }
                }
            }
            self.next.sort_unstable();
            std::mem::swap(&mut self.frontier, &mut self.next);
        }
    }
}

/// Final activated set of one cascade realization, sorted ascending.
pub fn run_cascade<R: Rng>(graph: &Graph, seeds: &[usize], p: f64, rng: &mut R) -> Result<Vec<usize>> {
    check_seeds(graph, seeds)?;
    let mut ws = Workspace::new(graph.node_count());
    let mut active = Vec::new();
    ws.cascade(graph, seeds, p, rng, |v| active.push(v));
    active.sort_unstable();
    Ok(active)
}

#[derive(Clone)]
struct Tally {
    total: u64,
    total_sq: u128,
    community: Vec<u64>,
    community_sq: Vec<u128>,
}

impl Tally {
    fn new(communities: usize) -> Self {
        Tally {
            total: 0,
            total_sq: 0,
            community: vec![0; communities],
            community_sq: vec![0; communities],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.total += other.total;
        self.total_sq += other.total_sq;
        for c in 0..self.community.len() {
            self.community[c] += other.community[c];
            self.community_sq[c] += other.community_sq[c];
        }
        self
    }
}

// population std of x/scale over m samples, from integer moments
fn std_from_moments(sum: u64, sum_sq: u128, m: usize, scale: usize) -> f64 {
    let m = m as u128;
    let s = sum as u128;
    let numerator = (m * sum_sq).saturating_sub(s * s);
    (numerator as f64).sqrt() / (m as f64 * scale as f64)
}

pub fn estimate_spread(
    graph: &Graph,
    partition: &CommunityPartition,
    seeds: &[usize],
    config: &CascadeConfig,
    seed: StreamSeed,
) -> Result<SpreadEstimate> {
    check_seeds(graph, seeds)?;
    config.validate()?;
    if partition.node_count() != graph.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} nodes, graph has {}",
            partition.node_count(),
            graph.node_count()
        )));
    }
    let m = config.num_simulations;
    let l = partition.community_count();
    let p = config.influence_probability;
    let labels = partition.labels();

    let run_chunk = |chunk: usize| {
        let mut ws = Workspace::new(graph.node_count());
        let mut tally = Tally::new(l);
        let mut counts = vec![0u64; l];
        let start = chunk * SIMS_PER_TASK;
        for sim in start..(start + SIMS_PER_TASK).min(m) {
            let mut rng = seed.stream(sim as u64);
            counts.iter_mut().for_each(|c| *c = 0);
            let mut activated = 0u64;
            ws.cascade(graph, seeds, p, &mut rng, |v| {
                activated += 1;
                counts[labels[v]] += 1;
            });
            tally.total += activated;
            tally.total_sq += u128::from(activated) * u128::from(activated);
            for c in 0..l {
                tally.community[c] += counts[c];
                tally.community_sq[c] += u128::from(counts[c]) * u128::from(counts[c]);
            }
        }
        tally
    };

    let chunks = m.div_ceil(SIMS_PER_TASK);
    let tally = if chunks > 1 {
        (0..chunks)
            .into_par_iter()
            .map(run_chunk)
            .reduce(|| Tally::new(l), Tally::merge)
    } else {
        run_chunk(0)
    };

    let n = graph.node_count();
    let sizes = partition.sizes();
    Ok(SpreadEstimate {
        total_outreach: tally.total as f64 / (m as f64 * n as f64),
        community_outreach: (0..l)
            .map(|c| tally.community[c] as f64 / (m as f64 * sizes[c] as f64))
            .collect(),
        std_total: std_from_moments(tally.total, tally.total_sq, m, n),
        community_std: (0..l)
            .map(|c| std_from_moments(tally.community[c], tally.community_sq[c], m, sizes[c]))
            .collect(),
    })
}

/// Exact expected outreach by enumerating all `2^|E|` live-edge subgraphs.
pub fn exact_spread(
    graph: &Graph,
    partition: &CommunityPartition,
    seeds: &[usize],
    p: f64,
) -> Result<SpreadEstimate> {
    check_seeds(graph, seeds)?;
    let moments = exact_moments(graph, partition.labels(), partition.community_count(), seeds, p)?;
    let n = graph.node_count() as f64;
    let sizes = partition.sizes();
    let var = |mean: f64, sq: f64| (sq - mean * mean).max(0.0).sqrt();
    let mean_total = moments.total / n;
    Ok(SpreadEstimate {
        total_outreach: mean_total,
        community_outreach: (0..sizes.len())
            .map(|c| moments.community[c] / sizes[c] as f64)
            .collect(),
        std_total: var(mean_total, moments.total_sq / (n * n)),
        community_std: (0..sizes.len())
            .map(|c| {
                let s = sizes[c] as f64;
                var(moments.community[c] / s, moments.community_sq[c] / (s * s))
            })
            .collect(),
    })
}

struct ExactMoments {
    total: f64,
    total_sq: f64,
    community: Vec<f64>,
    community_sq: Vec<f64>,
}

fn exact_moments(
    graph: &Graph,
    labels: &[usize],
    communities: usize,
    seeds: &[usize],
    p: f64,
) -> Result<ExactMoments> {
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    if edges.len() > MAX_ENUMERATION_EDGES {
        return Err(Error::EnumerationBound {
            edges: edges.len(),
            max: MAX_ENUMERATION_EDGES,
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("influence probability {p} not in [0, 1]")));
    }
    let n = graph.node_count();
    let e = edges.len();
    let mut out = ExactMoments {
        total: 0.0,
        total_sq: 0.0,
        community: vec![0.0; communities],
        community_sq: vec![0.0; communities],
    };
    let mut parent: Vec<usize> = Vec::with_capacity(n);
    let mut counts = vec![0usize; communities];
    let mut seeded_root = vec![false; n];
    for mask in 0u32..(1u32 << e) {
        let live = mask.count_ones() as i32;
        let weight = p.powi(live) * (1.0 - p).powi(e as i32 - live);
        if weight == 0.0 {
            continue;
        }
        parent.clear();
        parent.extend(0..n);
        for (i, &(u, v)) in edges.iter().enumerate() {
            if mask & (1 << i) != 0 {
                let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                if ru != rv {
                    parent[ru] = rv;
                }
            }
        }
        seeded_root.iter_mut().for_each(|s| *s = false);
        for &s in seeds {
            let r = find(&mut parent, s);
            seeded_root[r] = true;
        }
        counts.iter_mut().for_each(|c| *c = 0);
        let mut reached = 0usize;
        for v in 0..n {
            let r = find(&mut parent, v);
            if seeded_root[r] {
                reached += 1;
                counts[labels[v]] += 1;
            }
        }
        out.total += weight * reached as f64;
        out.total_sq += weight * (reached * reached) as f64;
        for c in 0..communities {
            out.community[c] += weight * counts[c] as f64;
            out.community_sq[c] += weight * (counts[c] * counts[c]) as f64;
        }
    }
    Ok(out)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Minimum per-community outreach.
pub fn maximin_fairness(estimate: &SpreadEstimate) -> f64 {
    estimate
        .community_outreach
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest pairwise gap between community outreaches.
pub fn disparity(estimate: &SpreadEstimate) -> f64 {
    let (lo, hi) = estimate
        .community_outreach
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}

/// Outreach plus `phi` times maximin fairness.
pub fn fair_reward(estimate: &SpreadEstimate, phi: f64) -> Result<f64> {
    if !(phi >= 0.0) {
        return Err(Error::InvalidParameter(format!("phi must be non-negative, got {phi}")));
    }
    Ok(estimate.total_outreach + phi * maximin_fairness(estimate))
}

/// Gain in fair reward from adding `new_node` to `current_seeds`. Both terms
/// share the same simulation streams; the reward of the empty set is zero.
#[allow(clippy::too_many_arguments)]
pub fn marginal_reward(
    graph: &Graph,
    partition: &CommunityPartition,
    current_seeds: &[usize],
    new_node: usize,
    phi: f64,
    config: &CascadeConfig,
    seed: StreamSeed,
) -> Result<f64> {
    if current_seeds.contains(&new_node) {
        return Err(Error::AlreadySeeded(new_node));
    }
    let before = if current_seeds.is_empty() {
        0.0
    } else {
        fair_reward(&estimate_spread(graph, partition, current_seeds, config, seed)?, phi)?
    };
    let mut extended = current_seeds.to_vec();
    extended.push(new_node);
    let after = fair_reward(&estimate_spread(graph, partition, &extended, config, seed)?, phi)?;
    Ok(after - before)
}

/// A set function giving the expected number of activated nodes; the
/// objective the greedy baselines maximize.
pub trait SpreadOracle: Sync {
    fn node_count(&self) -> usize;
    fn expected_activated(&self, seeds: &[usize]) -> f64;
}

/// Exact expected spread via live-edge enumeration.
pub struct ExactOracle<'a> {
    graph: &'a Graph,
    p: f64,
    labels: Vec<usize>,
}

impl<'a> ExactOracle<'a> {
    pub fn new(graph: &'a Graph, p: f64) -> Result<Self> {
        if graph.edge_count() > MAX_ENUMERATION_EDGES {
            return Err(Error::EnumerationBound {
                edges: graph.edge_count(),
                max: MAX_ENUMERATION_EDGES,
            });
        }
        Ok(ExactOracle {
            graph,
            p,
            labels: vec![0; graph.node_count()],
        })
    }
}

impl SpreadOracle for ExactOracle<'_> {
    fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    fn expected_activated(&self, seeds: &[usize]) -> f64 {
        if seeds.is_empty() {
            return 0.0;
        }
        exact_moments(self.graph, &self.labels, 1, seeds, self.p)
            .map(|m| m.total)
            .unwrap_or(f64::NAN)
    }
}

/// Common-random-number estimator: `m` live-edge worlds fixed up front (world
/// `i` draws one uniform per edge, in canonical edge order, from stream `i`).
/// The estimate is an exact integer total over worlds, so it is monotone and
/// submodular as a set function.
pub struct SampledWorlds<'a> {
    graph: &'a Graph,
    /// For each node, the edge id of each neighbor slot.
    arc_edge: Vec<Vec<usize>>,
    /// Live-edge bitsets, one per world.
    worlds: Vec<Vec<u64>>,
}

impl<'a> SampledWorlds<'a> {
    pub fn new(graph: &'a Graph, config: &CascadeConfig, seed: StreamSeed) -> Result<Self> {
        config.validate()?;
        let edges: Vec<(usize, usize)> = graph.edges().collect();
        let mut arc_edge: Vec<Vec<usize>> =
            (0..graph.node_count()).map(|v| vec![0; graph.neighbors(v).len()]).collect();
        for (id, &(u, v)) in edges.iter().enumerate() {
            let iu = graph.neighbors(u).binary_search(&v).expect("symmetric adjacency");
            let iv = graph.neighbors(v).binary_search(&u).expect("symmetric adjacency");
            arc_edge[u][iu] = id;
            arc_edge[v][iv] = id;
        }
        let words = edges.len().div_ceil(64);
        let p = config.influence_probability;
        let worlds = (0..config.num_simulations)
            .into_par_iter()
            .map(|i| {
                let mut rng = seed.stream(i as u64);
                let mut bits = vec![0u64; words];
                for id in 0..edges.len() {
                    if rng.random::<f64>() < p {
                        bits[id / 64] |= 1 << (id % 64);
                    }
                }
                bits
            })
            .collect();
        Ok(SampledWorlds {
            graph,
            arc_edge,
            worlds,
        })
    }

    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    /// Total activated count summed over all worlds.
    pub fn total_activated(&self, seeds: &[usize]) -> u64 {
        let n = self.graph.node_count();
        self.worlds
            .par_iter()
            .map_init(
                || (vec![false; n], Vec::new()),
                |(seen, stack), bits| {
                    seen.iter_mut().for_each(|s| *s = false);
                    stack.clear();
                    let mut count = 0u64;
                    for &s in seeds {
                        if !seen[s] {
                            seen[s] = true;
                            stack.push(s);
                            count += 1;
                        }
                    }
                    while let Some(u) = stack.pop() {
                        for (slot, &v) in self.graph.neighbors(u).iter().enumerate() {
                            let id = self.arc_edge[u][slot];
                            if !seen[v] && bits[id / 64] & (1 << (id % 64)) != 0 {
                                seen[v] = true;
                                stack.push(v);
                                count += 1;
                            }
                        }
                    }
                    count
                },
            )
            .sum()
    }
}

impl SpreadOracle for SampledWorlds<'_> {
    fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    // Unnormalized so marginal gains are exact integer differences.
    fn expected_activated(&self, seeds: &[usize]) -> f64 {
        self.total_activated(seeds) as f64
    }
}
