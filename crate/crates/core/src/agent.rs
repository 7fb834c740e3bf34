//! Deep Q-learning over structure2vec embeddings with a fairness-augmented
//! reward, and greedy seed selection with a learned network.
//!
//! Per episode a graph is drawn uniformly from the pool and `k` nodes are
//! chosen ε-greedily. After each choice the cumulative reward
//! `R_t = outreach + phi * maximin_fairness` is re-estimated with a small
//! number of cascades and the transition stores the marginal `R_t - R_{t-1}`.
//! Every `K` steps (once the replay holds a full batch) one SGD step is taken
//! on the squared TD error, bootstrapping from the live network.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::diffusion::{estimate_spread, fair_reward, CascadeConfig};
use crate::error::{Error, Result};
use crate::graph::{CommunityPartition, Graph};
use crate::qnet::{
    best_unselected, compute_embeddings, q_gradient, q_values_all, sgd_step, AdamState, ParameterSet, StateFeatures,
    INIT_SCALE,
};
use crate::rng::StreamSeed;

/// When ε is multiplied by its decay factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecayCadence {
    PerStep,
    PerEpisode,
}

/// Update rule applied to the batch-mean gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparameters {
    pub budget: usize,
    pub phi: f64,
    pub episodes: usize,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub decay_cadence: DecayCadence,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub update_period: usize,
    pub replay_capacity: usize,
    pub train_sims: usize,
    pub influence_probability: f64,
    pub embed_dim: usize,
    pub embed_iters: usize,
    pub rng_seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            budget: 30,
            phi: 1.0,
            episodes: 750,
            gamma: 1.0,
            epsilon_start: 1.0,
            epsilon_decay: 0.995,
            epsilon_min: 0.05,
            decay_cadence: DecayCadence::PerStep,
            batch_size: 32,
            learning_rate: 0.001,
            optimizer: Optimizer::Adam,
            update_period: 1,
            replay_capacity: 2000,
            train_sims: 20,
            influence_probability: 0.1,
            embed_dim: 64,
            embed_iters: 4,
            rng_seed: 0,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if self.budget == 0 {
            return fail("budget k must be >= 1".into());
        }
        if !(self.phi >= 0.0) {
            return fail(format!("phi must be non-negative, got {}", self.phi));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma must be in [0, 1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_min) {
            return fail("epsilon values must be probabilities".into());
        }
        if self.epsilon_min > self.epsilon_start {
            return fail(format!(
                "epsilon_min {} exceeds initial epsilon {}",
                self.epsilon_min, self.epsilon_start
            ));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return fail(format!("epsilon decay must be in (0, 1], got {}", self.epsilon_decay));
        }
        if self.batch_size == 0 || self.batch_size > self.replay_capacity {
            return fail(format!(
                "batch size {} must be in [1, replay capacity {}]",
                self.batch_size, self.replay_capacity
            ));
        }
        if !(self.learning_rate > 0.0) {
            return fail(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.update_period == 0 || self.embed_dim == 0 || self.embed_iters == 0 {
            return fail("update period, embedding size and embedding iterations must be >= 1".into());
        }
        CascadeConfig::new(self.influence_probability, self.train_sims)?;
        Ok(())
    }

    pub fn train_config(&self) -> CascadeConfig {
        CascadeConfig {
            influence_probability: self.influence_probability,
            num_simulations: self.train_sims,
        }
    }
}

/// `ε <- max(decay * ε, ε_min)`
#[derive(Clone, Copy, Debug)]
pub struct EpsilonSchedule {
    value: f64,
    decay: f64,
    min: f64,
}

impl EpsilonSchedule {
    pub fn new(start: f64, decay: f64, min: f64) -> Self {
        EpsilonSchedule {
            value: start,
            decay,
            min,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn decay(&mut self) -> f64 {
        self.value = (self.decay * self.value).max(self.min);
        self.value
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub graph_id: usize,
    pub before: Vec<usize>,
    pub action: usize,
    pub reward: f64,
    pub after: Vec<usize>,
    pub terminal: bool,
}

/// Bounded FIFO of transitions; the oldest entry is evicted first.
#[derive(Clone, Debug)]
pub struct ReplayMemory {
    capacity: usize,
    buffer: VecDeque<Transition>,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        ReplayMemory {
            capacity,
            buffer: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, transition: Transition) {
        if self.capacity == 0 {
            return;
        }
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(transition);
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.buffer.iter()
    }

    /// `count` distinct transitions drawn uniformly.
    pub fn sample<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<&Transition> {
        index::sample(rng, self.buffer.len(), count.min(self.buffer.len()))
            .into_iter()
            .map(|i| &self.buffer[i])
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Cumulative fair reward `R_T` at the end of the episode.
    pub reward: f64,
    pub outreach: f64,
    pub fairness: f64,
    /// ε after the episode's last decay.
    pub epsilon: f64,
    /// Mean squared TD error over the episode's updates, if any ran.
    pub mean_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub episodes: Vec<EpisodeRecord>,
    pub updates: usize,
    pub embed_iters: usize,
    /// SHA-256 of the serialized checkpoint of the returned parameters.
    pub checkpoint_digest: String,
}

impl TrainReport {
    pub const CSV_HEADER: &'static str = "episode,reward,outreach,fairness,epsilon,mean_loss";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.episodes {
            let loss = r.mean_loss.map_or_else(|| "nan".to_string(), |l| l.to_string());
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.episode, r.reward, r.outreach, r.fairness, r.epsilon, loss
            );
        }
        out
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.episodes.iter().map(|r| r.reward).collect()
    }

    pub fn outreach(&self) -> Vec<f64> {
        self.episodes.iter().map(|r| r.outreach).collect()
    }

    pub fn fairness(&self) -> Vec<f64> {
        self.episodes.iter().map(|r| r.fairness).collect()
    }
}

pub fn checkpoint_digest(params: &ParameterSet, embed_iters: usize) -> String {
    Sha256::digest(params.to_bytes(embed_iters))
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// A trained network together with the embedding depth it was trained at.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub params: ParameterSet,
    pub embed_iters: usize,
}

impl Policy {
    pub fn save(&self, path: &Path) -> Result<()> {
        self.params.save(self.embed_iters, path)
    }

    pub fn load(path: &Path) -> Result<Policy> {
        let (params, embed_iters) = ParameterSet::load(path)?;
        Ok(Policy { params, embed_iters })
    }

    pub fn digest(&self) -> String {
        checkpoint_digest(&self.params, self.embed_iters)
    }

    pub fn select_seeds(&self, graph: &Graph, partition: &CommunityPartition, k: usize) -> Result<Vec<usize>> {
        select_seeds(graph, partition, &self.params, self.embed_iters, k)
    }
}

fn check_feature_width(partition: &CommunityPartition, params: &ParameterSet) -> Result<()> {
    if partition.community_count() + 1 != params.feature_len() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} communities; network was sized for {}",
            partition.community_count(),
            params.community_count()
        )));
    }
    Ok(())
}

fn greedy_action(
    graph: &Graph,
    features: &StateFeatures,
    params: &ParameterSet,
    embed_iters: usize,
) -> Result<(usize, f64)> {
    let emb = compute_embeddings(graph, features, params, embed_iters)?;
    best_unselected(&q_values_all(&emb, params), features).ok_or(Error::NoCandidates)
}

/// With probability `epsilon` a uniformly random unselected node, otherwise
/// the unselected node with the highest Q (lowest index on ties).
#[allow(clippy::too_many_arguments)]
pub fn epsilon_greedy_action<R: Rng>(
    graph: &Graph,
    partition: &CommunityPartition,
    seeds: &[usize],
    params: &ParameterSet,
    embed_iters: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    check_feature_width(partition, params)?;
    let features = StateFeatures::new(partition, seeds);
    choose_action(graph, &features, params, embed_iters, epsilon, rng)
}

fn choose_action<R: Rng>(
    graph: &Graph,
    features: &StateFeatures,
    params: &ParameterSet,
    embed_iters: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    let n = graph.node_count();
    if (0..n).all(|v| features.is_selected(v)) {
        return Err(Error::NoCandidates);
    }
    if rng.random::<f64>() < epsilon {
        let open: Vec<usize> = (0..n).filter(|&v| !features.is_selected(v)).collect();
        Ok(open[rng.random_range(0..open.len())])
    } else {
        Ok(greedy_action(graph, features, params, embed_iters)?.0)
    }
}

/// Runs the learned policy greedily for `k` steps, re-embedding after every
/// selection. Returns nodes in selection order.
pub fn select_seeds(
    graph: &Graph,
    partition: &CommunityPartition,
    params: &ParameterSet,
    embed_iters: usize,
    k: usize,
) -> Result<Vec<usize>> {
    if k > graph.node_count() {
        return Err(Error::BudgetExceedsNodes {
            k,
            node_count: graph.node_count(),
        });
    }
    check_feature_width(partition, params)?;
    let mut features = StateFeatures::new(partition, &[]);
    let mut seeds = Vec::with_capacity(k);
    for _ in 0..k {
        let (v, _) = greedy_action(graph, &features, params, embed_iters)?;
        features.set_selected(v, true);
        seeds.push(v);
    }
    Ok(seeds)
}

/// TD target: `r` for terminal transitions, otherwise
/// `r + gamma * max_a Q(S', a)` over nodes not in `S'`.
pub fn td_target(
    graph: &Graph,
    partition: &CommunityPartition,
    transition: &Transition,
    params: &ParameterSet,
    embed_iters: usize,
    gamma: f64,
) -> Result<f64> {
    if transition.terminal {
        return Ok(transition.reward);
    }
    let features = StateFeatures::new(partition, &transition.after);
    match greedy_action(graph, &features, params, embed_iters) {
        Ok((_, best)) => Ok(transition.reward + gamma * best),
        // every node already selected: nothing to bootstrap from
        Err(Error::NoCandidates) => Ok(transition.reward),
        Err(e) => Err(e),
    }
}

pub fn train(pool: &[(Graph, CommunityPartition)], hp: &Hyperparameters) -> Result<(ParameterSet, TrainReport)> {
    train_observed(pool, hp, None, |_| {})
}

/// [`train`] with optional initial parameters and a per-episode callback.
pub fn train_observed(
    pool: &[(Graph, CommunityPartition)],
    hp: &Hyperparameters,
    init: Option<ParameterSet>,
    mut observer: impl FnMut(&EpisodeRecord),
) -> Result<(ParameterSet, TrainReport)> {
    hp.validate()?;
    let (_, first) = pool.first().ok_or(Error::EmptyPool)?;
    let communities = first.community_count();
    let master = StreamSeed::new(hp.rng_seed);
    let mut params = match init {
        Some(p) => p,
        None => ParameterSet::random(1 + communities, hp.embed_dim, INIT_SCALE, master.derive("init")),
    };
    params.validate()?;
    for (g, p) in pool {
        check_feature_width(p, &params)?;
        if hp.budget > g.node_count() {
            return Err(Error::BudgetExceedsNodes {
                k: hp.budget,
                node_count: g.node_count(),
            });
        }
    }

    let k = hp.budget;
    let config = hp.train_config();
    let reward_seed = master.derive("reward");
    let mut graph_rng = master.derive("graph").rng();
    let mut explore_rng = master.derive("explore").rng();
    let mut replay_rng = master.derive("replay").rng();
    let mut epsilon = EpsilonSchedule::new(hp.epsilon_start, hp.epsilon_decay, hp.epsilon_min);
    let mut replay = ReplayMemory::new(hp.replay_capacity);
    let mut adam = AdamState::new(&params);
    let mut records = Vec::with_capacity(hp.episodes);
    let mut updates = 0usize;
    let mut global_step = 0u64;

    for episode in 1..=hp.episodes {
        let graph_id = graph_rng.random_range(0..pool.len());
        let (graph, partition) = &pool[graph_id];
        let mut features = StateFeatures::new(partition, &[]);
        let mut seeds: Vec<usize> = Vec::with_capacity(k);
        let mut previous = 0.0;
        let mut last_outreach = 0.0;
        let mut last_fairness = 0.0;
        let mut losses = Vec::new();

        for t in 1..=k {
            let action = choose_action(graph, &features, &params, hp.embed_iters, epsilon.value(), &mut explore_rng)?;
            let before = seeds.clone();
            seeds.push(action);
            features.set_selected(action, true);

            let estimate = estimate_spread(graph, partition, &seeds, &config, reward_seed.child(global_step))?;
            global_step += 1;
            let cumulative = fair_reward(&estimate, hp.phi)?;
            last_outreach = estimate.total_outreach;
            last_fairness = estimate.maximin_fairness();
            replay.push(Transition {
                graph_id,
                before,
                action,
                reward: cumulative - previous,
                after: seeds.clone(),
                terminal: t == k,
            });
            previous = cumulative;

            if (episode * k + t) % hp.update_period == 0 && replay.len() >= hp.batch_size {
                let batch = replay.sample(hp.batch_size, &mut replay_rng);
                let (grad_sum, loss) = batch_gradient(pool, &batch, &params, hp)?;
                params = match hp.optimizer {
                    Optimizer::Sgd => sgd_step(&params, &grad_sum, hp.learning_rate, hp.batch_size)?,
                    Optimizer::Adam => adam.step(&params, &grad_sum, hp.learning_rate, hp.batch_size)?,
                };
                losses.push(loss);
                updates += 1;
            }
            if hp.decay_cadence == DecayCadence::PerStep {
                epsilon.decay();
            }
        }
        if hp.decay_cadence == DecayCadence::PerEpisode {
            epsilon.decay();
        }

        let record = EpisodeRecord {
            episode,
            reward: previous,
            outreach: last_outreach,
            fairness: last_fairness,
            epsilon: epsilon.value(),
            mean_loss: (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64),
        };
        observer(&record);
        records.push(record);
    }

    let checkpoint_digest = checkpoint_digest(&params, hp.embed_iters);
    Ok((
        params,
        TrainReport {
            episodes: records,
            updates,
            embed_iters: hp.embed_iters,
            checkpoint_digest,
        },
    ))
}

/// Summed gradient and mean loss over a batch. Targets use the current
/// parameters. Per-transition work runs in parallel; gradients are summed in
/// batch order.
fn batch_gradient(
    pool: &[(Graph, CommunityPartition)],
    batch: &[&Transition],
    params: &ParameterSet,
    hp: &Hyperparameters,
) -> Result<(ParameterSet, f64)> {
    let grads = batch
        .par_iter()
        .map(|tr| {
            let (graph, partition) = &pool[tr.graph_id];
            let target = td_target(graph, partition, tr, params, hp.embed_iters, hp.gamma)?;
            let features = StateFeatures::new(partition, &tr.before);
            q_gradient(graph, &features, params, hp.embed_iters, tr.action, target)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sum = ParameterSet::zeros(params.feature_len(), params.embed_dim());
    let mut loss = 0.0;
    for g in &grads {
        sum.add_scaled(&g.grad, 1.0)?;
        loss += g.loss;
    }
    loss /= grads.len() as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite("training loss"));
    }
    Ok((sum, loss))
}
