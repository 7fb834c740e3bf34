//! Seeding baselines: greedy and CELF hill-climbing on a spread oracle,
//! degree and PageRank rankings, and parity (group-proportional) seeding on
//! top of any ranking.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::diffusion::{CascadeConfig, SampledWorlds, SpreadOracle};
use crate::error::{Error, Result};
use crate::graph::{CommunityPartition, Graph};
use crate::rng::StreamSeed;

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 200;
/// Live-edge worlds per greedy/CELF marginal evaluation.
pub const DEFAULT_GREEDY_SIMS: usize = 200;

/// Nodes ordered by descending score, ascending index on ties.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedNodes(Vec<(usize, f64)>);

impl RankedNodes {
    pub fn from_scores(scores: &[f64]) -> Self {
        let mut ranked: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        RankedNodes(ranked)
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn top_k(&self, k: usize) -> Vec<usize> {
        self.0.iter().take(k).map(|&(v, _)| v).collect()
    }

    /// Score per node index.
    pub fn scores(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.0.len()];
        for &(v, s) in &self.0 {
            out[v] = s;
        }
        out
    }
}

fn check_budget(k: usize, n: usize) -> Result<()> {
    if k > n {
        Err(Error::BudgetExceedsNodes { k, node_count: n })
    } else {
        Ok(())
    }
}

pub fn degree_ranking(graph: &Graph) -> RankedNodes {
    let scores: Vec<f64> = (0..graph.node_count()).map(|v| graph.neighbors(v).len() as f64).collect();
    RankedNodes::from_scores(&scores)
}

pub fn top_degree(graph: &Graph, k: usize) -> Result<Vec<usize>> {
    check_budget(k, graph.node_count())?;
    Ok(degree_ranking(graph).top_k(k))
}

/// Power iteration for the undirected random walk with uniform teleport.
/// Isolated nodes spread their mass uniformly. Stops when the L1 change of
/// one iteration is at most `tol`.
pub fn pagerank(graph: &Graph, damping: f64, tol: f64, max_iters: usize) -> Result<RankedNodes> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::InvalidParameter(format!("damping must be in (0, 1), got {damping}")));
    }
    let n = graph.node_count();
    if n == 0 {
        return Ok(RankedNodes(Vec::new()));
    }
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iters {
        let dangling: f64 = (0..n).filter(|&v| graph.neighbors(v).is_empty()).map(|v| rank[v]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for u in 0..n {
            let nbrs = graph.neighbors(u);
            if nbrs.is_empty() {
                continue;
            }
            let share = damping * rank[u] / nbrs.len() as f64;
            for &v in nbrs {
                next[v] += share;
            }
        }
        let change: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if change <= tol {
            let total: f64 = rank.iter().sum();
            rank.iter_mut().for_each(|x| *x /= total);
            return Ok(RankedNodes::from_scores(&rank));
        }
    }
    Err(Error::NonConvergence(max_iters))
}

/// Per-community seed counts proportional to community sizes, by largest
/// remainder. Remainder ties go to the larger community, then the lower
/// community index.
pub fn parity_quotas(sizes: &[usize], k: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| k * s / n).collect();
    let assigned: usize = quotas.iter().sum();
    // remainders as exact integers: (k * s) mod n
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = ((k * sizes[a]) % n, (k * sizes[b]) % n);
        rb.cmp(&ra).then(sizes[b].cmp(&sizes[a])).then(a.cmp(&b))
    });
    for &c in order.iter().take(k - assigned) {
        quotas[c] += 1;
    }
    quotas
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParitySeeds {
    /// Selected nodes, in ranking order.
    pub seeds: Vec<usize>,
    pub quotas: Vec<usize>,
    /// Seats that could not be filled inside their community and were given
    /// to the best remaining nodes of any community.
    pub overflow: usize,
}

pub fn parity_seeding(ranking: &RankedNodes, partition: &CommunityPartition, k: usize) -> Result<ParitySeeds> {
    check_budget(k, partition.node_count())?;
    if ranking.len() != partition.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "ranking covers {} nodes, partition {}",
            ranking.len(),
            partition.node_count()
        )));
    }
    let quotas = parity_quotas(partition.sizes(), k);
    let mut remaining = quotas.clone();
    let mut taken = vec![false; ranking.len()];
    let mut picked = 0;
    for &(v, _) in ranking.entries() {
        let c = partition.label(v);
        if remaining[c] > 0 {
            remaining[c] -= 1;
            taken[v] = true;
            picked += 1;
        }
    }
    let overflow = k - picked;
    let mut spill = overflow;
    for &(v, _) in ranking.entries() {
        if spill == 0 {
            break;
        }
        if !taken[v] {
            taken[v] = true;
            spill -= 1;
        }
    }
    let seeds = ranking.entries().iter().map(|&(v, _)| v).filter(|&v| taken[v]).collect();
    Ok(ParitySeeds {
        seeds,
        quotas,
        overflow,
    })
}

/// Parity seeding on the degree ranking.
pub fn parity_degree(graph: &Graph, partition: &CommunityPartition, k: usize) -> Result<Vec<usize>> {
    Ok(parity_seeding(&degree_ranking(graph), partition, k)?.seeds)
}

/// Parity seeding on the PageRank ranking.
pub fn fair_pagerank(
    graph: &Graph,
    partition: &CommunityPartition,
    k: usize,
    damping: f64,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<usize>> {
    let ranking = pagerank(graph, damping, tol, max_iters)?;
    Ok(parity_seeding(&ranking, partition, k)?.seeds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyOutcome {
    pub seeds: Vec<usize>,
    /// Oracle calls made for marginal gains.
    pub evaluations: usize,
}

fn check_deadline(deadline: Option<Instant>, method: &str) -> Result<()> {
    match deadline {
        Some(d) if Instant::now() > d => Err(Error::TimedOut(method.to_string())),
        _ => Ok(()),
    }
}

/// Plain hill-climbing: every round evaluates every unselected node and adds
/// the largest marginal gain (lowest index on ties).
pub fn greedy_with<O: SpreadOracle + ?Sized>(oracle: &O, k: usize, deadline: Option<Instant>) -> Result<GreedyOutcome> {
    let n = oracle.node_count();
    check_budget(k, n)?;
    let mut seeds = Vec::with_capacity(k);
    let mut in_set = vec![false; n];
    let mut base = 0.0;
    let mut evaluations = 0;
    let mut trial = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for v in (0..n).filter(|&v| !in_set[v]) {
            check_deadline(deadline, "greedy")?;
            trial.clear();
            trial.extend_from_slice(&seeds);
            trial.push(v);
            let gain = oracle.expected_activated(&trial) - base;
            evaluations += 1;
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((v, gain));
            }
        }
        let (v, gain) = best.expect("k <= n leaves a candidate");
        seeds.push(v);
        in_set[v] = true;
        base += gain;
    }
    Ok(GreedyOutcome { seeds, evaluations })
}

struct Entry {
    gain: f64,
    node: usize,
    round: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // max-heap on gain; lower node index wins ties
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain.total_cmp(&other.gain).then(other.node.cmp(&self.node))
    }
}

/// Lazy greedy. Marginal gains from earlier rounds are upper bounds on the
/// current ones (submodularity), so the top of the heap is re-evaluated until
/// a freshly computed gain stays on top.
pub fn celf_with<O: SpreadOracle + ?Sized>(oracle: &O, k: usize, deadline: Option<Instant>) -> Result<GreedyOutcome> {
    let n = oracle.node_count();
    check_budget(k, n)?;
    let mut seeds: Vec<usize> = Vec::with_capacity(k);
    let mut evaluations = 0;
    if k == 0 {
        return Ok(GreedyOutcome { seeds, evaluations });
    }
    let mut heap = BinaryHeap::with_capacity(n);
    for v in 0..n {
        check_deadline(deadline, "celf")?;
        heap.push(Entry {
            gain: oracle.expected_activated(&[v]),
            node: v,
            round: 0,
        });
        evaluations += 1;
    }
    let mut base = 0.0;
    let mut trial = Vec::with_capacity(k);
    while seeds.len() < k {
        let top = heap.pop().expect("k <= n leaves a candidate");
        if top.round == seeds.len() {
            base += top.gain;
            seeds.push(top.node);
            continue;
        }
        check_deadline(deadline, "celf")?;
        trial.clear();
        trial.extend_from_slice(&seeds);
        trial.push(top.node);
        let gain = oracle.expected_activated(&trial) - base;
        evaluations += 1;
        heap.push(Entry {
            gain,
            node: top.node,
            round: seeds.len(),
        });
    }
    Ok(GreedyOutcome { seeds, evaluations })
}

/// Greedy influence maximization with `config.num_simulations` shared
/// live-edge worlds as the evaluator.
pub fn greedy_im(graph: &Graph, k: usize, config: &CascadeConfig, seed: StreamSeed) -> Result<Vec<usize>> {
    let worlds = SampledWorlds::new(graph, config, seed)?;
    Ok(greedy_with(&worlds, k, None)?.seeds)
}

/// CELF with the same evaluator as [`greedy_im`]; returns the same seeds.
pub fn celf(graph: &Graph, k: usize, config: &CascadeConfig, seed: StreamSeed) -> Result<Vec<usize>> {
    let worlds = SampledWorlds::new(graph, config, seed)?;
    Ok(celf_with(&worlds, k, None)?.seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::ExactOracle;

    fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|l| (0, l))).unwrap()
    }

    #[test]
    fn degree_examples() {
        assert_eq!(top_degree(&star(5), 1).unwrap(), vec![0]);
        let path = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(top_degree(&path, 1).unwrap(), vec![1]);
        let cycle = Graph::from_edges(6, (0..6).map(|i| (i, (i + 1) % 6))).unwrap();
        assert_eq!(top_degree(&cycle, 2).unwrap(), vec![0, 1]);
        assert!(top_degree(&cycle, 7).is_err());
    }

    #[test]
    fn pagerank_symmetric_cases() {
        let edge = Graph::from_edges(2, [(0, 1)]).unwrap();
        let r = pagerank(&edge, 0.85, 1e-12, 200).unwrap().scores();
        assert!((r[0] - 0.5).abs() < 1e-12 && (r[1] - 0.5).abs() < 1e-12);
        let cycle = Graph::from_edges(7, (0..7).map(|i| (i, (i + 1) % 7))).unwrap();
        for s in pagerank(&cycle, 0.85, 1e-12, 200).unwrap().scores() {
            assert!((s - 1.0 / 7.0).abs() < 1e-10);
        }
    }

    #[test]
    fn pagerank_star_matches_two_class_fixed_point() {
        let d: f64 = 0.85;
        // center c, leaf l: c = (1-d)/5 + d*4*l ; l = (1-d)/5 + d*c/4
        let t = (1.0 - d) / 5.0;
        let c = (t + 4.0 * d * t) / (1.0 - d * d);
        let l = t + d * c / 4.0;
        let r = pagerank(&star(4), d, 1e-12, 500).unwrap().scores();
        assert!((r[0] - c).abs() < 1e-10, "{} vs {c}", r[0]);
        assert!((r[1] - l).abs() < 1e-10);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pagerank_reports_non_convergence() {
        assert!(matches!(pagerank(&star(4), 0.85, 1e-12, 3), Err(Error::NonConvergence(3))));
        assert!(pagerank(&star(4), 1.0, 1e-12, 3).is_err());
    }

    #[test]
    fn quota_examples() {
        assert_eq!(parity_quotas(&[20, 80], 10), vec![2, 8]);
        assert_eq!(parity_quotas(&[50, 50], 3), vec![2, 1]);
        assert_eq!(parity_quotas(&[30, 70], 5), vec![1, 4]);
        assert_eq!(parity_quotas(&[10], 4), vec![4]);
    }

    #[test]
    fn parity_fills_quotas_with_top_ranked_members() {
        let scores: Vec<f64> = (0..10).map(|v| 10.0 - v as f64).collect();
        let ranking = RankedNodes::from_scores(&scores);
        let partition = CommunityPartition::new(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2).unwrap();
        let out = parity_seeding(&ranking, &partition, 4).unwrap();
        assert_eq!(out.quotas, vec![2, 2]);
        assert_eq!(out.seeds, vec![0, 1, 5, 6]);
        assert_eq!(out.overflow, 0);

        let single = CommunityPartition::single(10).unwrap();
        assert_eq!(parity_seeding(&ranking, &single, 3).unwrap().seeds, ranking.top_k(3));
    }

    #[test]
    fn greedy_examples() {
        let config = CascadeConfig::new(1.0, 10).unwrap();
        assert_eq!(greedy_im(&star(6), 1, &config, 1.into()).unwrap(), vec![0]);
        let path = Graph::from_edges(5, (0..4).map(|i| (i, i + 1))).unwrap();
        let zero = CascadeConfig::new(0.0, 10).unwrap();
        assert_eq!(greedy_im(&path, 2, &zero, 1.into()).unwrap(), vec![0, 1]);
        assert_eq!(celf(&path, 2, &zero, 1.into()).unwrap(), vec![0, 1]);
    }

    #[test]
    fn celf_single_round_picks_best_singleton() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (1, 3), (4, 5)]).unwrap();
        let exact = ExactOracle::new(&g, 0.5).unwrap();
        let out = celf_with(&exact, 1, None).unwrap();
        assert_eq!(out.seeds, vec![1]);
        assert_eq!(out.evaluations, 6);
    }

    #[test]
    fn deadline_in_the_past_times_out() {
        let g = star(5);
        let exact = ExactOracle::new(&g, 0.5).unwrap();
        assert!(matches!(
            celf_with(&exact, 2, Some(Instant::now() - std::time::Duration::from_secs(1))),
            Err(Error::TimedOut(_))
        ));
    }
}
