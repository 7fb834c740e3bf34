//! Evaluation protocol: score seed sets, compare methods over test sets,
//! sweep k and p, test a frozen policy on larger graphs, and ablate φ.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::agent::{train, Hyperparameters, Policy, TrainReport};
use crate::baselines::{
    self, celf_with, degree_ranking, greedy_with, pagerank, parity_seeding, DEFAULT_DAMPING, DEFAULT_GREEDY_SIMS,
    DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE,
};
use crate::diffusion::{estimate_spread, CascadeConfig, SampledWorlds};
use crate::error::{Error, Result};
use crate::graph::{CommunityPartition, Graph};
use crate::rng::StreamSeed;

pub const DEFAULT_EVAL_SIMS: usize = 1000;
pub const ROLLING_WINDOW: usize = 50;
pub const ABLATION_PHIS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const RESULTS_HEADER: &str =
    "method,dataset,k,p,outreach_mean,outreach_std,fairness_mean,fairness_std,disparity_mean,seconds,seed";

/// Outcome of evaluating one seed set (or a per-method average of several).
///
/// `fairness_mean` is the smallest expected community outreach and
/// `fairness_std` the per-simulation spread of that community.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub method: String,
    pub dataset: String,
    pub k: usize,
    pub p: f64,
    pub outreach_mean: f64,
    pub outreach_std: f64,
    pub fairness_mean: f64,
    pub fairness_std: f64,
    pub disparity_mean: f64,
    pub seconds: f64,
    pub seed: u64,
}

impl EvalRecord {
    pub fn labelled(mut self, method: &str, dataset: &str) -> Self {
        self.method = method.to_string();
        self.dataset = dataset.to_string();
        self
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.dataset,
            self.k,
            self.p,
            self.outreach_mean,
            self.outreach_std,
            self.fairness_mean,
            self.fairness_std,
            self.disparity_mean,
            self.seconds,
            self.seed
        )
    }
}

pub fn records_to_csv(records: &[EvalRecord]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn evaluate_seed_set(
    graph: &Graph,
    partition: &CommunityPartition,
    seeds: &[usize],
    p: f64,
    m_eval: usize,
    seed: StreamSeed,
) -> Result<EvalRecord> {
    let config = CascadeConfig::new(p, m_eval)?;
    let est = estimate_spread(graph, partition, seeds, &config, seed)?;
    let worst = est.worst_community();
    Ok(EvalRecord {
        method: String::new(),
        dataset: String::new(),
        k: seeds.len(),
        p,
        outreach_mean: est.total_outreach,
        outreach_std: est.std_total,
        fairness_mean: est.maximin_fairness(),
        fairness_std: est.community_std[worst],
        disparity_mean: est.disparity(),
        seconds: 0.0,
        seed: seed.value(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Celf,
    Greedy,
    Degree,
    PageRank,
    /// Parity seeding on the degree ranking.
    Parity,
    FairPageRank,
    Dq4FairIm,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Celf,
        Method::Greedy,
        Method::Degree,
        Method::PageRank,
        Method::Parity,
        Method::FairPageRank,
        Method::Dq4FairIm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Celf => "celf",
            Method::Greedy => "greedy",
            Method::Degree => "degree",
            Method::PageRank => "pagerank",
            Method::Parity => "parity",
            Method::FairPageRank => "fair_pagerank",
            Method::Dq4FairIm => "dq4fairim",
        }
    }

    pub fn valid_names() -> String {
        Method::ALL.map(Method::name).join(", ")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod {
                name: s.to_string(),
                valid: Method::valid_names(),
            })
    }
}

/// Knobs shared by every seeding method.
#[derive(Clone, Debug)]
pub struct MethodSettings {
    /// Live-edge worlds per greedy/CELF evaluation.
    pub greedy_sims: usize,
    pub damping: f64,
    pub tolerance: f64,
    pub max_iters: usize,
    /// Wall-clock budget for greedy and CELF.
    pub time_budget: Option<Duration>,
    /// Required by [`Method::Dq4FairIm`].
    pub policy: Option<Policy>,
}

impl Default for MethodSettings {
    fn default() -> Self {
        MethodSettings {
            greedy_sims: DEFAULT_GREEDY_SIMS,
            damping: DEFAULT_DAMPING,
            tolerance: DEFAULT_TOLERANCE,
            max_iters: DEFAULT_MAX_ITERS,
            time_budget: None,
            policy: None,
        }
    }
}

pub fn select_seeds(
    method: Method,
    graph: &Graph,
    partition: &CommunityPartition,
    k: usize,
    p: f64,
    settings: &MethodSettings,
    seed: StreamSeed,
) -> Result<Vec<usize>> {
    let deadline = settings.time_budget.map(|b| Instant::now() + b);
    match method {
        Method::Celf | Method::Greedy => {
            let worlds = SampledWorlds::new(graph, &CascadeConfig::new(p, settings.greedy_sims)?, seed)?;
            let outcome = if method == Method::Celf {
                celf_with(&worlds, k, deadline)?
            } else {
                greedy_with(&worlds, k, deadline)?
            };
            Ok(outcome.seeds)
        }
        Method::Degree => baselines::top_degree(graph, k),
        Method::PageRank => {
            if k > graph.node_count() {
                return Err(Error::BudgetExceedsNodes {
                    k,
                    node_count: graph.node_count(),
                });
            }
            Ok(pagerank(graph, settings.damping, settings.tolerance, settings.max_iters)?.top_k(k))
        }
        Method::Parity => Ok(parity_seeding(&degree_ranking(graph), partition, k)?.seeds),
        Method::FairPageRank => baselines::fair_pagerank(
            graph,
            partition,
            k,
            settings.damping,
            settings.tolerance,
            settings.max_iters,
        ),
        Method::Dq4FairIm => settings
            .policy
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("dq4fairim needs a trained checkpoint".into()))?
            .select_seeds(graph, partition, k),
    }
}

/// Named collection of evaluation graphs.
#[derive(Clone, Debug)]
pub struct TestSet {
    pub name: String,
    pub graphs: Vec<(Graph, CommunityPartition)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub method: Method,
    pub graph_index: usize,
    pub error: String,
}

/// Per-method averages plus the per-graph records they came from.
#[derive(Clone, Debug, Default)]
pub struct Comparison {
    pub rows: Vec<EvalRecord>,
    /// One record per successful (method, graph) cell; `dataset` is
    /// `<set>/<graph index>`.
    pub cells: Vec<EvalRecord>,
    pub failures: Vec<CellFailure>,
}

impl Comparison {
    pub fn row(&self, method: Method) -> Option<&EvalRecord> {
        self.rows.iter().find(|r| r.method == method.name())
    }

    pub fn cells_for(&self, method: Method) -> impl Iterator<Item = &EvalRecord> {
        self.cells.iter().filter(move |r| r.method == method.name())
    }

    fn extend(&mut self, other: Comparison) {
        self.rows.extend(other.rows);
        self.cells.extend(other.cells);
        self.failures.extend(other.failures);
    }
}

fn average(records: &[EvalRecord], method: Method, dataset: &str, k: usize, p: f64, seed: u64) -> EvalRecord {
    let n = records.len() as f64;
    let mean = |f: fn(&EvalRecord) -> f64| records.iter().map(f).sum::<f64>() / n;
    EvalRecord {
        method: method.name().to_string(),
        dataset: dataset.to_string(),
        k,
        p,
        outreach_mean: mean(|r| r.outreach_mean),
        outreach_std: mean(|r| r.outreach_std),
        fairness_mean: mean(|r| r.fairness_mean),
        fairness_std: mean(|r| r.fairness_std),
        disparity_mean: mean(|r| r.disparity_mean),
        seconds: mean(|r| r.seconds),
        seed,
    }
}

/// Runs every method on every graph. Seed selection for a cell draws from
/// `(master, method, graph)`; evaluation draws from `(master, graph)` only,
/// so methods that pick the same seeds get the same numbers. A failing cell
/// is recorded and skipped.
#[allow(clippy::too_many_arguments)]
pub fn compare_methods(
    test_set: &TestSet,
    methods: &[Method],
    k: usize,
    p: f64,
    m_eval: usize,
    settings: &MethodSettings,
    master: StreamSeed,
) -> Result<Comparison> {
    if test_set.graphs.is_empty() {
        return Err(Error::EmptyPool);
    }
    CascadeConfig::new(p, m_eval)?;
    let cells: Vec<(Method, usize)> = methods
        .iter()
        .flat_map(|&m| (0..test_set.graphs.len()).map(move |g| (m, g)))
        .collect();
    let outcomes: Vec<Result<EvalRecord>> = cells
        .par_iter()
        .map(|&(method, gi)| {
            let (graph, partition) = &test_set.graphs[gi];
            let select_seed = master.derive("select").derive(method.name()).child(gi as u64);
            let started = Instant::now();
            let seeds = select_seeds(method, graph, partition, k, p, settings, select_seed)?;
            let seconds = started.elapsed().as_secs_f64();
            let eval_seed = master.derive("eval").child(gi as u64);
            let mut record = evaluate_seed_set(graph, partition, &seeds, p, m_eval, eval_seed)?
                .labelled(method.name(), &format!("{}/{gi}", test_set.name));
            record.seconds = seconds;
            record.seed = master.value();
            Ok(record)
        })
        .collect();

    let mut out = Comparison::default();
    for (&(method, graph_index), outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(r) => out.cells.push(r),
            Err(e) => out.failures.push(CellFailure {
                method,
                graph_index,
                error: e.to_string(),
            }),
        }
    }
    for &method in methods {
        let mine: Vec<EvalRecord> = out.cells_for(method).cloned().collect();
        if !mine.is_empty() {
            out.rows.push(average(&mine, method, &test_set.name, k, p, master.value()));
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub fn sweep_k(
    test_set: &TestSet,
    methods: &[Method],
    ks: &[usize],
    p: f64,
    m_eval: usize,
    settings: &MethodSettings,
    master: StreamSeed,
) -> Result<Comparison> {
    let mut out = Comparison::default();
    for &k in ks {
        out.extend(compare_methods(test_set, methods, k, p, m_eval, settings, master)?);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub fn sweep_p(
    test_set: &TestSet,
    methods: &[Method],
    ps: &[f64],
    k: usize,
    m_eval: usize,
    settings: &MethodSettings,
    master: StreamSeed,
) -> Result<Comparison> {
    let mut out = Comparison::default();
    for &p in ps {
        out.extend(compare_methods(test_set, methods, k, p, m_eval, settings, master)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    K,
    P,
}

/// Plot data for a sweep: `method,<k|p>,outreach_mean,outreach_std,fairness_mean,fairness_std`.
pub fn sweep_plot_csv(rows: &[EvalRecord], axis: SweepAxis) -> String {
    let mut out = String::new();
    let name = if axis == SweepAxis::K { "k" } else { "p" };
    let _ = writeln!(out, "method,{name},outreach_mean,outreach_std,fairness_mean,fairness_std");
    for r in rows {
        let x = match axis {
            SweepAxis::K => r.k.to_string(),
            SweepAxis::P => r.p.to_string(),
        };
        let _ = writeln!(
            out,
            "{},{x},{},{},{},{}",
            r.method, r.outreach_mean, r.outreach_std, r.fairness_mean, r.fairness_std
        );
    }
    out
}

#[derive(Clone, Debug)]
pub struct GeneralizationRun {
    pub policy: Policy,
    pub report: TrainReport,
    pub comparison: Comparison,
    /// Digest of the checkpoint used for each test set, in order.
    pub digests: Vec<String>,
}

/// Trains once on `train_pool`, then evaluates the frozen policy next to the
/// other `methods` on each test set.
#[allow(clippy::too_many_arguments)]
pub fn generalization_run(
    train_pool: &[(Graph, CommunityPartition)],
    test_sets: &[TestSet],
    hp: &Hyperparameters,
    methods: &[Method],
    p: f64,
    m_eval: usize,
    settings: &MethodSettings,
    master: StreamSeed,
) -> Result<GeneralizationRun> {
    let (params, report) = train(train_pool, hp)?;
    let policy = Policy {
        params,
        embed_iters: hp.embed_iters,
    };
    let settings = MethodSettings {
        policy: Some(policy.clone()),
        ..settings.clone()
    };
    let mut methods = methods.to_vec();
    if !methods.contains(&Method::Dq4FairIm) {
        methods.insert(0, Method::Dq4FairIm);
    }
    let mut comparison = Comparison::default();
    let mut digests = Vec::with_capacity(test_sets.len());
    for set in test_sets {
        digests.push(settings.policy.as_ref().map(Policy::digest).unwrap_or_default());
        comparison.extend(compare_methods(set, &methods, hp.budget, p, m_eval, &settings, master)?);
    }
    Ok(GeneralizationRun {
        policy,
        report,
        comparison,
        digests,
    })
}

/// Means over each full window; empty when the series is shorter than the window.
pub fn rolling_mean(series: &[f64], window: usize) -> Vec<f64> {
    if window == 0 {
        return Vec::new();
    }
    series.windows(window).map(|w| w.iter().sum::<f64>() / window as f64).collect()
}

#[derive(Clone, Debug)]
pub struct PhiRun {
    pub phi: f64,
    pub report: TrainReport,
    pub reward: Vec<f64>,
    pub outreach: Vec<f64>,
    pub fairness: Vec<f64>,
}

/// One training run per φ, otherwise identical (same pool, seed and knobs).
pub fn ablate_phi(
    pool: &[(Graph, CommunityPartition)],
    phis: &[f64],
    hp: &Hyperparameters,
    window: usize,
) -> Result<Vec<PhiRun>> {
    phis.iter()
        .map(|&phi| {
            let (_, report) = train(pool, &Hyperparameters { phi, ..hp.clone() })?;
            Ok(PhiRun {
                phi,
                reward: rolling_mean(&report.rewards(), window),
                outreach: rolling_mean(&report.outreach(), window),
                fairness: rolling_mean(&report.fairness(), window),
                report,
            })
        })
        .collect()
}

/// Plot data for an ablation: `phi,episode,reward,outreach,fairness`, where
/// `episode` is the last episode of each rolling window.
pub fn ablation_plot_csv(runs: &[PhiRun], window: usize) -> String {
    let mut out = String::from("phi,episode,reward,outreach,fairness\n");
    for run in runs {
        for (i, ((r, o), f)) in run.reward.iter().zip(&run.outreach).zip(&run.fairness).enumerate() {
            let _ = writeln!(out, "{},{},{r},{o},{f}", run.phi, i + window);
        }
    }
    out
}
