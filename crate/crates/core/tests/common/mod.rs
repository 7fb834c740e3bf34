//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the library's own algorithms
//! except through the public types.
#![allow(dead_code)]

use fairspread::graph::{CommunityPartition, Graph};
use fairspread::qnet::{q_gradient, ParameterSet, StateFeatures};
use fairspread::rng::StreamSeed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random simple graph on `n` nodes with at most `max_edges` edges.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, max_edges: usize, density: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if edges.len() < max_edges && rng.random::<f64>() < density {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Two communities, both non-empty (needs n >= 2).
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize) -> CommunityPartition {
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        if labels.contains(&0) && labels.contains(&1) {
            return CommunityPartition::new(labels, 2).unwrap();
        }
    }
}

/// Expected activated count under IC by enumerating every live-edge subset
/// and flood-filling from the seeds.
pub fn brute_expected_count(graph: &Graph, seeds: &[usize], p: f64) -> f64 {
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    let n = graph.node_count();
    let mut total = 0.0;
    for mask in 0u64..(1 << edges.len()) {
        let live = mask.count_ones() as i32;
        let weight = p.powi(live) * (1.0 - p).powi(edges.len() as i32 - live);
        if weight == 0.0 {
            continue;
        }
        let mut adj = vec![Vec::new(); n];
        for (i, &(u, v)) in edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = seeds.to_vec();
        for &s in seeds {
            seen[s] = true;
        }
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        total += weight * seen.iter().filter(|&&s| s).count() as f64;
    }
    total
}

/// Best expected count over every k-subset.
pub fn brute_optimum(graph: &Graph, k: usize, p: f64) -> f64 {
    fn rec(graph: &Graph, k: usize, p: f64, start: usize, cur: &mut Vec<usize>, best: &mut f64) {
        if cur.len() == k {
            *best = best.max(brute_expected_count(graph, cur, p));
            return;
        }
        for v in start..graph.node_count() {
            cur.push(v);
            rec(graph, k, p, v + 1, cur, best);
            cur.pop();
        }
    }
    let mut best = f64::MIN;
    rec(graph, k, p, 0, &mut Vec::new(), &mut best);
    best
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Plain-loop forward pass. Returns Q and the smallest absolute
/// pre-activation met anywhere (to steer clear of relu kinks).
pub fn naive_q(graph: &Graph, features: &StateFeatures, params: &ParameterSet, t_embed: usize, action: usize) -> (f64, f64) {
    let n = graph.node_count();
    let d = params.embed_dim();
    let f = params.feature_len();
    let x = features.matrix();
    let mut kink = f64::INFINITY;
    let mut mu = vec![vec![0.0; d]; n];
    for _ in 0..t_embed {
        let mut next = vec![vec![0.0; d]; n];
        for v in 0..n {
            let mut agg = vec![0.0; d];
            for &u in graph.neighbors(v) {
                for k in 0..d {
                    agg[k] += mu[u][k];
                }
            }
            for j in 0..d {
                let mut pre = 0.0;
                for i in 0..f {
                    pre += x[[v, i]] * params.theta1[[i, j]];
                }
                for k in 0..d {
                    pre += params.theta2[[j, k]] * agg[k];
                }
                kink = kink.min(pre.abs());
                next[v][j] = relu(pre);
            }
        }
        mu = next;
    }
    let mut pooled = vec![0.0; d];
    for row in &mu {
        for k in 0..d {
            pooled[k] += row[k];
        }
    }
    let mut q = 0.0;
    for j in 0..d {
        let mut a = 0.0;
        let mut b = 0.0;
        for k in 0..d {
            a += params.theta4[[j, k]] * pooled[k];
            b += params.theta5[[j, k]] * mu[action][k];
        }
        kink = kink.min(a.abs()).min(b.abs());
        q += params.theta3[j] * relu(a) + params.theta3[d + j] * relu(b);
    }
    (q, kink)
}

pub struct GradientCase {
    pub graph: Graph,
    pub features: StateFeatures,
    pub params: ParameterSet,
    pub t_embed: usize,
    pub action: usize,
    pub target: f64,
}

/// Random instance whose pre-activations all sit at least 1e-3 from zero,
/// so central differences never straddle a relu kink.
pub fn gradient_case(rng: &mut ChaCha8Rng, max_n: usize, d: usize, t_embed: usize) -> GradientCase {
    loop {
        let n = rng.random_range(2..=max_n);
        let graph = random_graph(rng, n, usize::MAX, 0.5);
        let partition = random_partition(rng, n);
        let selected: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.3).collect();
        let open: Vec<usize> = (0..n).filter(|v| !selected.contains(v)).collect();
        if open.is_empty() {
            continue;
        }
        let action = open[rng.random_range(0..open.len())];
        let features = StateFeatures::new(&partition, &selected);
        let params = ParameterSet::random(3, d, 0.5, StreamSeed::new(rng.random()));
        let (_, kink) = naive_q(&graph, &features, &params, t_embed, action);
        if kink < 1e-3 {
            continue;
        }
        return GradientCase {
            graph,
            features,
            params,
            t_embed,
            action,
            target: rng.random_range(-1.0..1.0),
        };
    }
}

/// Largest relative error between the analytic loss gradient and central
/// differences of the naive forward pass (step 1e-5). Relative error is
/// `|a - b| / max(|a|, |b|, 1e-6)`.
pub fn gradient_error(case: &GradientCase) -> f64 {
    let h = 1e-5;
    let analytic = q_gradient(&case.graph, &case.features, &case.params, case.t_embed, case.action, case.target)
        .unwrap()
        .grad;
    let loss = |p: &ParameterSet| {
        let (q, _) = naive_q(&case.graph, &case.features, p, case.t_embed, case.action);
        (case.target - q) * (case.target - q)
    };
    let mut worst: f64 = 0.0;
    let mut probe = case.params.clone();
    for group in 0..5 {
        for i in 0..analytic.slices()[group].len() {
            let orig = probe.slices()[group][i];
            probe.slices_mut()[group][i] = orig + h;
            let up = loss(&probe);
            probe.slices_mut()[group][i] = orig - h;
            let down = loss(&probe);
            probe.slices_mut()[group][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.slices()[group][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Homophilic BA pools at the acceptance scale.
pub fn hba_pool(n: usize, count: usize, seed: u64) -> Vec<(Graph, CommunityPartition)> {
    fairspread::synth::generate_pool(
        &fairspread::synth::HbaParams {
            node_count: n,
            edges_per_node: 4,
            minority_fraction: 0.2,
            homophily: 0.8,
            rng_seed: seed,
        },
        count,
    )
    .unwrap()
}
