//! Structure2Vec node embeddings and the Q-value head, with analytic
//! gradients.
//!
//! Embeddings start at zero and are updated synchronously:
//!
//! ```text
//! mu_v <- relu(theta1^T x_v + theta2 * sum_{u in N(v)} mu_u)
//! ```
//!
//! and a state-action pair is scored as
//!
//! ```text
//! Q(S, a) = theta3^T relu([theta4 * sum_u mu_u || theta5 * mu_a])
//! ```
//!
//! Row-major storage: `mu` is `n x d`, so the update is computed as
//! `X theta1 + Agg theta2^T` with `Agg = A mu`.

use std::fs;
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView1, Axis, Zip};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{CommunityPartition, Graph};
use crate::rng::StreamSeed;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FSQNET\0\x01";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Initialization half-width for freshly sampled parameters.
pub const INIT_SCALE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet {
    /// `(1 + community_count) x d`
    pub theta1: Array2<f64>,
    /// `d x d`, applied to the neighbor sum
    pub theta2: Array2<f64>,
    /// `2d`, the linear head
    pub theta3: Array1<f64>,
    /// `d x d`, applied to the pooled embedding
    pub theta4: Array2<f64>,
    /// `d x d`, applied to the action embedding
    pub theta5: Array2<f64>,
}

impl ParameterSet {
    pub fn zeros(feature_len: usize, d: usize) -> Self {
        ParameterSet {
            theta1: Array2::zeros((feature_len, d)),
            theta2: Array2::zeros((d, d)),
            theta3: Array1::zeros(2 * d),
            theta4: Array2::zeros((d, d)),
            theta5: Array2::zeros((d, d)),
        }
    }

    /// Uniform in `[-scale, scale]`, filled theta1..theta5 in row-major order.
    pub fn random(feature_len: usize, d: usize, scale: f64, seed: StreamSeed) -> Self {
        let mut params = Self::zeros(feature_len, d);
        let mut rng = seed.rng();
        for slice in params.slices_mut() {
            for x in slice.iter_mut() {
                *x = rng.random_range(-scale..=scale);
            }
        }
        params
    }

    pub fn embed_dim(&self) -> usize {
        self.theta2.nrows()
    }

    pub fn feature_len(&self) -> usize {
        self.theta1.nrows()
    }

    pub fn community_count(&self) -> usize {
        self.feature_len() - 1
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slices(&self) -> [&[f64]; 5] {
        [
            self.theta1.as_slice().expect("standard layout"),
            self.theta2.as_slice().expect("standard layout"),
            self.theta3.as_slice().expect("standard layout"),
            self.theta4.as_slice().expect("standard layout"),
            self.theta5.as_slice().expect("standard layout"),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.theta1.as_slice_mut().expect("standard layout"),
            self.theta2.as_slice_mut().expect("standard layout"),
            self.theta3.as_slice_mut().expect("standard layout"),
            self.theta4.as_slice_mut().expect("standard layout"),
            self.theta5.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.embed_dim();
        let ok = self.theta1.ncols() == d
            && self.theta1.nrows() >= 2
            && self.theta2.dim() == (d, d)
            && self.theta3.len() == 2 * d
            && self.theta4.dim() == (d, d)
            && self.theta5.dim() == (d, d);
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "inconsistent parameter shapes: theta1 {:?}, theta2 {:?}, theta3 {}, theta4 {:?}, theta5 {:?}",
                self.theta1.dim(),
                self.theta2.dim(),
                self.theta3.len(),
                self.theta4.dim(),
                self.theta5.dim()
            )));
        }
        if self.slices().iter().any(|s| s.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("parameters"));
        }
        Ok(())
    }

    fn same_shape(&self, other: &ParameterSet) -> bool {
        self.theta1.dim() == other.theta1.dim()
            && self.theta2.dim() == other.theta2.dim()
            && self.theta3.dim() == other.theta3.dim()
            && self.theta4.dim() == other.theta4.dim()
            && self.theta5.dim() == other.theta5.dim()
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &ParameterSet, scale: f64) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::DimensionMismatch("parameter sets differ in shape".into()));
        }
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (a, b) in dst.iter_mut().zip(src) {
                *a += scale * b;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self, t_embed: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * self.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.embed_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.community_count() as u32).to_le_bytes());
        out.extend_from_slice(&(t_embed as u32).to_le_bytes());
        for slice in self.slices() {
            for x in slice {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    /// Parses a checkpoint; returns the parameters and the stored embedding
    /// iteration count.
    pub fn from_bytes(bytes: &[u8]) -> Result<(ParameterSet, usize)> {
        let bad = |msg: &str| Error::Checkpoint(msg.to_string());
        if bytes.len() < 24 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(bad("missing magic header"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        if word(8) != CHECKPOINT_VERSION as usize {
            return Err(bad("unsupported version"));
        }
        let (d, l, t_embed) = (word(12), word(16), word(20));
        if d == 0 || l == 0 || t_embed == 0 {
            return Err(bad("zero dimension"));
        }
        let mut params = ParameterSet::zeros(1 + l, d);
        let expected = 24 + 8 * params.len();
        if bytes.len() != expected {
            return Err(Error::Checkpoint(format!(
                "expected {expected} bytes for d={d}, communities={l}; found {}",
                bytes.len()
            )));
        }
        let mut offset = 24;
        for slice in params.slices_mut() {
            for x in slice.iter_mut() {
                *x = f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
                offset += 8;
            }
        }
        params.validate()?;
        Ok((params, t_embed))
    }

    pub fn save(&self, t_embed: usize, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes(t_embed)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(ParameterSet, usize)> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Per-node input features: column 0 is the selection bit, columns
/// `1..=community_count` the community one-hot.
#[derive(Clone, Debug, PartialEq)]
pub struct StateFeatures {
    x: Array2<f64>,
}

impl StateFeatures {
    pub fn new(partition: &CommunityPartition, selected: &[usize]) -> Self {
        let n = partition.node_count();
        let mut x = Array2::zeros((n, 1 + partition.community_count()));
        for v in 0..n {
            x[[v, 1 + partition.label(v)]] = 1.0;
        }
        for &s in selected {
            x[[s, 0]] = 1.0;
        }
        StateFeatures { x }
    }

    pub fn set_selected(&mut self, v: usize, selected: bool) {
        self.x[[v, 0]] = if selected { 1.0 } else { 0.0 };
    }

    pub fn is_selected(&self, v: usize) -> bool {
        self.x[[v, 0]] != 0.0
    }

    pub fn node_count(&self) -> usize {
        self.x.nrows()
    }

    pub fn feature_len(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.x
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingState {
    /// `n x d`
    pub mu: Array2<f64>,
    pub iterations: usize,
}

impl EmbeddingState {
    pub fn pooled(&self) -> Array1<f64> {
        self.mu.sum_axis(Axis(0))
    }
}

fn check_inputs(graph: &Graph, features: &StateFeatures, params: &ParameterSet, t_embed: usize) -> Result<()> {
    if features.feature_len() != params.feature_len() {
        return Err(Error::DimensionMismatch(format!(
            "feature length {} but theta1 has {} rows",
            features.feature_len(),
            params.feature_len()
        )));
    }
    if features.node_count() != graph.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "features for {} nodes, graph has {}",
            features.node_count(),
            graph.node_count()
        )));
    }
    if t_embed == 0 {
        return Err(Error::InvalidParameter("embedding iterations must be >= 1".into()));
    }
    Ok(())
}

/// `out[v] = sum_{u in N(v)} mu[u]`
fn neighbor_sum(graph: &Graph, mu: &Array2<f64>, out: &mut Array2<f64>) {
    let d = mu.ncols();
    let src = mu.as_slice().expect("standard layout");
    let dst = out.as_slice_mut().expect("standard layout");
    dst.iter_mut().for_each(|x| *x = 0.0);
    for v in 0..graph.node_count() {
        let row = &mut dst[v * d..(v + 1) * d];
        for &u in graph.neighbors(v) {
            for (a, b) in row.iter_mut().zip(&src[u * d..(u + 1) * d]) {
                *a += b;
            }
        }
    }
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Activations kept for backpropagation: pre-activations of every round and
/// the neighbor sums that fed them.
struct Trace {
    pre: Vec<Array2<f64>>,
    agg: Vec<Array2<f64>>,
    mu: Array2<f64>,
}

fn forward(graph: &Graph, features: &StateFeatures, params: &ParameterSet, t_embed: usize, keep: bool) -> Trace {
    let n = graph.node_count();
    let d = params.embed_dim();
    let base = features.matrix().dot(&params.theta1);
    let mut mu = Array2::<f64>::zeros((n, d));
    let mut agg = Array2::<f64>::zeros((n, d));
    let mut trace = Trace {
        pre: Vec::new(),
        agg: Vec::new(),
        mu: Array2::zeros((0, 0)),
    };
    for round in 0..t_embed {
        let pre = if round == 0 {
            // mu starts at zero, so the neighbor term vanishes
            base.clone()
        } else {
            neighbor_sum(graph, &mu, &mut agg);
            let mut pre = agg.dot(&params.theta2.t());
            pre += &base;
            pre
        };
        mu = pre.mapv(relu);
        if keep {
            trace.agg.push(if round == 0 { Array2::zeros((0, 0)) } else { agg.clone() });
            trace.pre.push(pre);
        }
    }
    trace.mu = mu;
    trace
}

pub fn compute_embeddings(
    graph: &Graph,
    features: &StateFeatures,
    params: &ParameterSet,
    t_embed: usize,
) -> Result<EmbeddingState> {
    check_inputs(graph, features, params, t_embed)?;
    Ok(EmbeddingState {
        mu: forward(graph, features, params, t_embed, false).mu,
        iterations: t_embed,
    })
}

/// Q value of each candidate; the pooled term is computed once.
pub fn q_values(embeddings: &EmbeddingState, candidates: &[usize], params: &ParameterSet) -> Result<Vec<f64>> {
    let d = params.embed_dim();
    if embeddings.mu.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "embeddings have width {}, parameters expect {d}",
            embeddings.mu.ncols()
        )));
    }
    let n = embeddings.mu.nrows();
    if let Some(&bad) = candidates.iter().find(|&&a| a >= n) {
        return Err(Error::NodeOutOfRange {
            index: bad,
            node_count: n,
        });
    }
    let pooled = params.theta4.dot(&embeddings.pooled());
    let head_pool = params.theta3.slice(s![..d]);
    let head_action = params.theta3.slice(s![d..]);
    let state_term: f64 = head_pool.iter().zip(&pooled).map(|(w, h)| w * relu(*h)).sum();
    Ok(candidates
        .iter()
        .map(|&a| {
            let h = params.theta5.dot(&embeddings.mu.row(a));
            state_term + head_action.iter().zip(&h).map(|(w, h)| w * relu(*h)).sum::<f64>()
        })
        .collect())
}

/// Q values for every node at once (one `n x d x d` product instead of one
/// matrix-vector product per candidate).
pub fn q_values_all(embeddings: &EmbeddingState, params: &ParameterSet) -> Vec<f64> {
    let d = params.embed_dim();
    let pooled = params.theta4.dot(&embeddings.pooled());
    let head_pool = params.theta3.slice(s![..d]);
    let head_action = params.theta3.slice(s![d..]);
    let state_term: f64 = head_pool.iter().zip(&pooled).map(|(w, h)| w * relu(*h)).sum();
    let h = embeddings.mu.dot(&params.theta5.t());
    h.rows()
        .into_iter()
        .map(|row| state_term + head_action.iter().zip(row).map(|(w, h)| w * relu(*h)).sum::<f64>())
        .collect()
}

/// Forward pass and Q for a single action.
pub fn q_value(
    graph: &Graph,
    features: &StateFeatures,
    params: &ParameterSet,
    t_embed: usize,
    action: usize,
) -> Result<f64> {
    let emb = compute_embeddings(graph, features, params, t_embed)?;
    Ok(q_values(&emb, &[action], params)?[0])
}

/// Result of differentiating `(target - Q(S, a))^2`.
#[derive(Clone, Debug)]
pub struct Gradient {
    pub grad: ParameterSet,
    pub q: f64,
    pub loss: f64,
}

fn outer(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.len(), b.len()));
    for (i, &x) in a.iter().enumerate() {
        out.row_mut(i).zip_mut_with(&b, |o, &y| *o = x * y);
    }
    out
}

/// Gradient of `(target - Q(S, action))^2` with respect to every parameter,
/// backpropagated through the head and all embedding rounds. `target` is a
/// constant.
pub fn q_gradient(
    graph: &Graph,
    features: &StateFeatures,
    params: &ParameterSet,
    t_embed: usize,
    action: usize,
    target: f64,
) -> Result<Gradient> {
    check_inputs(graph, features, params, t_embed)?;
    if action >= graph.node_count() {
        return Err(Error::NodeOutOfRange {
            index: action,
            node_count: graph.node_count(),
        });
    }
    let d = params.embed_dim();
    let trace = forward(graph, features, params, t_embed, true);
    let mu = &trace.mu;

    let pooled = mu.sum_axis(Axis(0));
    let h_pool = params.theta4.dot(&pooled);
    let mu_a = mu.row(action);
    let h_act = params.theta5.dot(&mu_a);
    let w_pool = params.theta3.slice(s![..d]);
    let w_act = params.theta3.slice(s![d..]);
    let r_pool = h_pool.mapv(relu);
    let r_act = h_act.mapv(relu);
    let q = w_pool.dot(&r_pool) + w_act.dot(&r_act);
    if !q.is_finite() {
        return Err(Error::NonFinite("q value"));
    }
    let residual = target - q;
    let g = -2.0 * residual;

    let mut grad = ParameterSet::zeros(params.feature_len(), d);
    grad.theta3.slice_mut(s![..d]).assign(&(&r_pool * g));
    grad.theta3.slice_mut(s![d..]).assign(&(&r_act * g));

    let mut dh_pool = &w_pool * g;
    Zip::from(&mut dh_pool).and(&h_pool).for_each(|x, &h| {
        if h <= 0.0 {
            *x = 0.0
        }
    });
    let mut dh_act = &w_act * g;
    Zip::from(&mut dh_act).and(&h_act).for_each(|x, &h| {
        if h <= 0.0 {
            *x = 0.0
        }
    });
    grad.theta4 = outer(dh_pool.view(), pooled.view());
    grad.theta5 = outer(dh_act.view(), mu_a);
    let d_pooled = params.theta4.t().dot(&dh_pool);
    let d_mu_a = params.theta5.t().dot(&dh_act);

    let n = graph.node_count();
    let mut d_mu = Array2::<f64>::zeros((n, d));
    for mut row in d_mu.rows_mut() {
        row.assign(&d_pooled);
    }
    {
        let mut row = d_mu.row_mut(action);
        row += &d_mu_a;
    }

    let x = features.matrix();
    let mut d_agg = Array2::<f64>::zeros((n, d));
    for round in (0..t_embed).rev() {
        let mut d_pre = d_mu;
        Zip::from(&mut d_pre).and(&trace.pre[round]).for_each(|g, &p| {
            if p <= 0.0 {
                *g = 0.0
            }
        });
        grad.theta1 += &x.t().dot(&d_pre);
        if round == 0 {
            break;
        }
        grad.theta2 += &d_pre.t().dot(&trace.agg[round]);
        let d_agg_in = d_pre.dot(&params.theta2);
        // adjacency is symmetric, so the transpose of the neighbor sum is itself
        neighbor_sum(graph, &d_agg_in, &mut d_agg);
        d_mu = d_agg.clone();
    }

    if grad.slices().iter().any(|s| s.iter().any(|x| !x.is_finite())) {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(Gradient {
        grad,
        q,
        loss: residual * residual,
    })
}

/// `params - (learning_rate / batch_size) * grad_sum`
pub fn sgd_step(
    params: &ParameterSet,
    grad_sum: &ParameterSet,
    learning_rate: f64,
    batch_size: usize,
) -> Result<ParameterSet> {
    if batch_size == 0 {
        return Err(Error::InvalidParameter("batch size must be >= 1".into()));
    }
    let mut next = params.clone();
    next.add_scaled(grad_sum, -learning_rate / batch_size as f64)?;
    Ok(next)
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// First and second moment estimates for Adam, one entry per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    first: ParameterSet,
    second: ParameterSet,
    steps: i32,
}

impl AdamState {
    pub fn new(like: &ParameterSet) -> Self {
        let zeros = ParameterSet::zeros(like.feature_len(), like.embed_dim());
        AdamState {
            first: zeros.clone(),
            second: zeros,
            steps: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.steps
    }

    /// Bias-corrected Adam step on the batch-mean gradient `grad_sum / batch_size`.
    pub fn step(
        &mut self,
        params: &ParameterSet,
        grad_sum: &ParameterSet,
        learning_rate: f64,
        batch_size: usize,
    ) -> Result<ParameterSet> {
        if batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be >= 1".into()));
        }
        if !params.same_shape(grad_sum) || !params.same_shape(&self.first) {
            return Err(Error::DimensionMismatch("parameter sets differ in shape".into()));
        }
        self.steps += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.steps);
        let c2 = 1.0 - ADAM_BETA2.powi(self.steps);
        let scale = 1.0 / batch_size as f64;
        let mut next = params.clone();
        let groups = next
            .slices_mut()
            .into_iter()
            .zip(grad_sum.slices())
            .zip(self.first.slices_mut().into_iter().zip(self.second.slices_mut()));
        for ((p, g), (m, v)) in groups {
            for i in 0..p.len() {
                let g = g[i] * scale;
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g;
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g;
                p[i] -= learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPSILON);
            }
        }
        Ok(next)
    }
}

/// Highest-Q node among those not yet selected; ties go to the lowest index.
pub fn best_unselected(q: &[f64], features: &StateFeatures) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (v, &value) in q.iter().enumerate() {
        if features.is_selected(v) {
            continue;
        }
        match best {
            Some((_, b)) if value <= b => {}
            _ => best = Some((v, value)),
        }
    }
    best
}
