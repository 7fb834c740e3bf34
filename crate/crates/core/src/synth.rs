//! Homophilic Barabási–Albert graphs with a majority and a minority group.
//!
//! Growth starts from a clique on `edges_per_node` nodes. Each arriving node
//! draws its group, then attaches `edges_per_node` distinct edges; a target is
//! chosen with weight `degree(target) * w`, where `w = homophily` for a
//! same-group target and `1 - homophily` otherwise. If every remaining
//! candidate has zero weight the draw falls back to uniform.
//!
//! Community 0 is the majority, community 1 the minority.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{CommunityPartition, Graph};
use crate::rng::StreamSeed;

pub const MAJORITY: usize = 0;
pub const MINORITY: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HbaParams {
    pub node_count: usize,
    pub edges_per_node: usize,
    pub minority_fraction: f64,
    pub homophily: f64,
    pub rng_seed: u64,
}

impl Default for HbaParams {
    fn default() -> Self {
        HbaParams {
            node_count: 1000,
            edges_per_node: 4,
            minority_fraction: 0.2,
            homophily: 0.8,
            rng_seed: 0,
        }
    }
}

impl HbaParams {
    pub fn validate(&self) -> Result<()> {
        if self.edges_per_node < 1 || self.edges_per_node >= self.node_count {
            return Err(Error::InvalidParameter(format!(
                "edges_per_node must be in [1, node_count), got {} for {} nodes",
                self.edges_per_node, self.node_count
            )));
        }
        if !(self.minority_fraction > 0.0 && self.minority_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "minority_fraction must be in (0, 1), got {}",
                self.minority_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.homophily) {
            return Err(Error::InvalidParameter(format!(
                "homophily must be in [0, 1], got {}",
                self.homophily
            )));
        }
        Ok(())
    }
}

pub fn generate_hba(params: &HbaParams) -> Result<(Graph, CommunityPartition)> {
    params.validate()?;
    let n = params.node_count;
    let m = params.edges_per_node;
    let mut rng = StreamSeed::new(params.rng_seed).derive("hba").rng();

    let mut group = Vec::with_capacity(n);
    let mut degree = vec![0usize; n];
    let mut edges = Vec::with_capacity(m * (m - 1) / 2 + (n - m) * m);

    let draw_group = |rng: &mut rand_chacha::ChaCha8Rng| {
        if rng.random::<f64>() < params.minority_fraction {
            MINORITY
        } else {
            MAJORITY
        }
    };

    for u in 0..m {
        group.push(draw_group(&mut rng));
        for v in 0..u {
            edges.push((v, u));
            degree[u] += 1;
            degree[v] += 1;
        }
    }

    let mut weights = vec![0.0f64; n];
    let mut chosen = vec![false; n];
    let mut targets = Vec::with_capacity(m);
    for new in m..n {
        let g = draw_group(&mut rng);
        group.push(g);
        for t in 0..new {
            let w = if group[t] == g {
                params.homophily
            } else {
                1.0 - params.homophily
            };
            weights[t] = degree[t] as f64 * w;
        }
        targets.clear();
        for _ in 0..m {
            let total: f64 = (0..new).filter(|&t| !chosen[t]).map(|t| weights[t]).sum();
            let pick = if total > 0.0 {
                let mut x = rng.random::<f64>() * total;
                let mut pick = None;
                let mut last = 0;
                for t in (0..new).filter(|&t| !chosen[t] && weights[t] > 0.0) {
                    last = t;
                    if x < weights[t] {
                        pick = Some(t);
                        break;
                    }
                    x -= weights[t];
                }
                // rounding can leave x just past the final bucket
                pick.unwrap_or(last)
            } else {
                let remaining: Vec<usize> = (0..new).filter(|&t| !chosen[t]).collect();
                remaining[rng.random_range(0..remaining.len())]
            };
            chosen[pick] = true;
            targets.push(pick);
        }
        for &t in &targets {
            chosen[t] = false;
            edges.push((t, new));
            degree[t] += 1;
            degree[new] += 1;
        }
    }

    let graph = Graph::from_edges(n, edges)?;
    let partition = CommunityPartition::with_names(
        group,
        vec!["majority".to_string(), "minority".to_string()],
    )?;
    Ok((graph, partition))
}

/// Pool of `count` HBA graphs sharing `base` except for per-graph seeds
/// derived from `base.rng_seed`.
pub fn generate_pool(base: &HbaParams, count: usize) -> Result<Vec<(Graph, CommunityPartition)>> {
    (0..count)
        .map(|i| {
            generate_hba(&HbaParams {
                rng_seed: pool_seed(base.rng_seed, i),
                ..*base
            })
        })
        .collect()
}

pub fn pool_seed(master: u64, index: usize) -> u64 {
    StreamSeed::new(master).derive("pool").child(index as u64).value()
}
