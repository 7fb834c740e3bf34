use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fairspread::agent::{train, DecayCadence, Hyperparameters, Optimizer, Policy};
use fairspread::error::{Error, Result};
use fairspread::experiments::{
    ablate_phi, ablation_plot_csv, compare_methods, evaluate_seed_set, records_to_csv, select_seeds, sweep_k,
    sweep_p, sweep_plot_csv, Comparison, MethodSettings, Method, SweepAxis, TestSet, ABLATION_PHIS,
};
use fairspread::graph::{align_communities, format_seeds, load_graph, parse_seeds, write_graph, LoadedGraph};
use fairspread::rng::StreamSeed;
use fairspread::synth::{generate_hba, pool_seed, HbaParams};

const MANIFEST: &str = "manifest.tsv";

/// Fairness-aware influence maximization on attributed graphs.
#[derive(Parser, Debug)]
#[command(name = "fairspread", version, args_override_self = true)]
struct Cli {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (1 = serial).
    #[arg(long, global = true, env = "FAIRSPREAD_JOBS")]
    jobs: Option<usize>,

    /// `key = value` file of flag defaults; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write homophilic Barabási–Albert graphs and a manifest.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Train a Q-network on a pool of graphs.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Pick a seed set with one method.
    #[command(args_override_self = true)]
    Seeds(SeedsArgs),
    /// Compare methods on a test set, or score one seed file.
    #[command(args_override_self = true)]
    Evaluate(EvaluateArgs),
    /// Compare methods across a grid of k or p values.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Train once per fairness weight and write rolling-mean curves.
    #[command(args_override_self = true)]
    Ablate(AblateArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Nodes per graph.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Edges added by each arriving node.
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// Probability that a node joins the minority.
    #[arg(long, default_value_t = 0.2)]
    minority: f64,
    /// Weight on same-group attachment.
    #[arg(long, default_value_t = 0.8)]
    homophily: f64,
    /// Number of graphs.
    #[arg(long, default_value_t = 60)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Directory holding a manifest written by `generate`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Edge list of a single graph (with --attributes).
    #[arg(long, requires = "attributes", conflicts_with = "data")]
    edges: Option<PathBuf>,
    /// `node_id<TAB>community` file of a single graph.
    #[arg(long, requires = "edges")]
    attributes: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Args, Debug)]
struct HyperArgs {
    /// Seeds per episode.
    #[arg(long, default_value_t = 30)]
    k: usize,
    /// Fairness weight in the reward.
    #[arg(long, default_value_t = 1.0)]
    phi: f64,
    #[arg(long, default_value_t = 750)]
    episodes: usize,
    /// Discount factor.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Initial exploration rate.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.995)]
    epsilon_decay: f64,
    #[arg(long, default_value_t = 0.05)]
    epsilon_min: f64,
    /// Decay ε once per episode instead of once per step.
    #[arg(long)]
    decay_per_episode: bool,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f64,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    optimizer: OptimizerArg,
    /// Steps between parameter updates.
    #[arg(long, default_value_t = 1)]
    update_period: usize,
    #[arg(long, default_value_t = 2000)]
    replay_capacity: usize,
    /// Cascade simulations per training reward.
    #[arg(long, default_value_t = 20)]
    train_sims: usize,
    /// Influence probability.
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    /// Embedding size.
    #[arg(long, default_value_t = 64)]
    embed_dim: usize,
    /// Message-passing rounds.
    #[arg(long, default_value_t = 4)]
    embed_iters: usize,
}

impl HyperArgs {
    fn to_hp(&self, seed: u64) -> Hyperparameters {
        Hyperparameters {
            budget: self.k,
            phi: self.phi,
            episodes: self.episodes,
            gamma: self.gamma,
            epsilon_start: self.epsilon,
            epsilon_decay: self.epsilon_decay,
            epsilon_min: self.epsilon_min,
            decay_cadence: if self.decay_per_episode {
                DecayCadence::PerEpisode
            } else {
                DecayCadence::PerStep
            },
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            optimizer: match self.optimizer {
                OptimizerArg::Adam => Optimizer::Adam,
                OptimizerArg::Sgd => Optimizer::Sgd,
            },
            update_period: self.update_period,
            replay_capacity: self.replay_capacity,
            train_sims: self.train_sims,
            influence_probability: self.p,
            embed_dim: self.embed_dim,
            embed_iters: self.embed_iters,
            rng_seed: seed,
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Where to write the trained network.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Per-episode CSV report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MethodArgs {
    /// Checkpoint for the `dq4fairim` method.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Live-edge worlds per greedy/CELF evaluation.
    #[arg(long, default_value_t = 200)]
    greedy_sims: usize,
    /// Wall-clock limit in seconds for greedy and CELF.
    #[arg(long)]
    time_budget: Option<f64>,
    /// PageRank damping.
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
}

impl MethodArgs {
    fn settings(&self) -> Result<MethodSettings> {
        let policy = self.checkpoint.as_deref().map(Policy::load).transpose()?;
        let time_budget = match self.time_budget {
            Some(s) if !(s > 0.0 && s.is_finite()) => {
                return Err(Error::InvalidParameter(format!("time budget must be positive, got {s}")))
            }
            s => s.map(Duration::from_secs_f64),
        };
        Ok(MethodSettings {
            greedy_sims: self.greedy_sims,
            damping: self.damping,
            time_budget,
            policy,
            ..MethodSettings::default()
        })
    }
}

#[derive(Args, Debug)]
struct SeedsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    methods: MethodArgs,
    /// One of: celf, greedy, degree, pagerank, parity, fair_pagerank, dq4fairim.
    #[arg(long)]
    method: String,
    #[arg(long, default_value_t = 30)]
    k: usize,
    /// Influence probability (greedy and CELF).
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    methods: MethodArgs,
    /// Comma-separated method names; `dq4fairim` is added when a checkpoint is given.
    #[arg(long, default_value = "celf,degree,pagerank,parity,fair_pagerank")]
    method_list: String,
    /// Cascade simulations per evaluation.
    #[arg(long, default_value_t = 1000)]
    m_eval: usize,
    /// Dataset label in the results; defaults to the input file or directory name.
    #[arg(long)]
    dataset: Option<String>,
    /// Fill the `seconds` column with measured selection time (not reproducible).
    #[arg(long)]
    timing: bool,
    /// Results CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long, default_value_t = 30)]
    k: usize,
    /// Influence probability.
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    /// Score this seed file on the single input graph instead of running methods.
    #[arg(long, conflicts_with = "data")]
    seeds: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepOver {
    K,
    P,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// Parameter to vary.
    #[arg(long, value_enum)]
    sweep: SweepOver,
    /// Comma-separated grid, e.g. `10,20,30,40,50`.
    #[arg(long)]
    values: String,
    /// Seeds when sweeping p.
    #[arg(long, default_value_t = 30)]
    k: usize,
    /// Influence probability when sweeping k.
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    /// Plot CSV (`method,<k|p>,outreach_mean,outreach_std,fairness_mean,fairness_std`).
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Comma-separated fairness weights.
    #[arg(long, default_value = "0,0.25,0.5,0.75,1")]
    phis: String,
    /// Rolling-mean window.
    #[arg(long, default_value_t = 50)]
    window: usize,
    /// Directory for `ablation.csv` and one report per weight.
    #[arg(long)]
    out: PathBuf,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    let items: Vec<T> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| invalid(format!("bad {what} value `{s}`"))))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(invalid(format!("empty {what} list")));
    }
    Ok(items)
}

fn load_inputs(input: &InputArgs) -> Result<(String, Vec<LoadedGraph>)> {
    let (name, mut graphs) = match (&input.data, &input.edges, &input.attributes) {
        (Some(dir), _, _) => {
            let path = dir.join(MANIFEST);
            let text = fs::read_to_string(&path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let mut graphs = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with("index\t") {
                    continue;
                }
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() != 4 {
                    return Err(Error::Parse {
                        path: path.clone(),
                        line: i + 1,
                        msg: "expected `index<TAB>seed<TAB>edges<TAB>attributes`".into(),
                    });
                }
                graphs.push(load_graph(&dir.join(cols[2]), &dir.join(cols[3]))?);
            }
            let name = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (name, graphs)
        }
        (None, Some(edges), Some(attrs)) => {
            let name = edges.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (name, vec![load_graph(edges, attrs)?])
        }
        _ => return Err(invalid("give --data DIR or --edges FILE --attributes FILE")),
    };
    if graphs.is_empty() {
        return Err(Error::EmptyPool);
    }
    align_communities(&mut graphs)?;
    Ok((name, graphs))
}

fn test_set(name: String, graphs: &[LoadedGraph]) -> TestSet {
    TestSet {
        name,
        graphs: graphs.iter().map(|g| (g.graph.clone(), g.partition.clone())).collect(),
    }
}

fn cmd_generate(args: &GenerateArgs, seed: u64) -> Result<()> {
    if args.count == 0 {
        return Err(invalid("--count must be >= 1"));
    }
    let base = HbaParams {
        node_count: args.n,
        edges_per_node: args.m,
        minority_fraction: args.minority,
        homophily: args.homophily,
        rng_seed: seed,
    };
    base.validate()?;
    fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    let mut manifest = format!(
        "# n={} m={} minority={} homophily={} seed={}\nindex\tseed\tedges\tattributes\n",
        args.n, args.m, args.minority, args.homophily, seed
    );
    for i in 0..args.count {
        let graph_seed = pool_seed(seed, i);
        let (g, p) = generate_hba(&HbaParams {
            rng_seed: graph_seed,
            ..base
        })?;
        let (edges, attrs) = (format!("hba_{i:03}.edges"), format!("hba_{i:03}.attr"));
        write_graph(&g, &p, &args.out.join(&edges), &args.out.join(&attrs))?;
        manifest.push_str(&format!("{i}\t{graph_seed}\t{edges}\t{attrs}\n"));
    }
    write(&args.out.join(MANIFEST), &manifest)
}

fn cmd_train(args: &TrainArgs, seed: u64) -> Result<()> {
    let (_, graphs) = load_inputs(&args.input)?;
    let pool: Vec<_> = graphs.into_iter().map(|g| (g.graph, g.partition)).collect();
    let hp = args.hyper.to_hp(seed);
    let (params, report) = train(&pool, &hp)?;
    Policy {
        params,
        embed_iters: hp.embed_iters,
    }
    .save(&args.checkpoint)?;
    if let Some(path) = &args.report {
        write(path, &report.to_csv())?;
    }
    Ok(())
}

fn single(graphs: Vec<LoadedGraph>) -> Result<LoadedGraph> {
    if graphs.len() != 1 {
        return Err(invalid(format!("expected one graph, got {}", graphs.len())));
    }
    Ok(graphs.into_iter().next().expect("length checked"))
}

fn cmd_seeds(args: &SeedsArgs, seed: u64) -> Result<()> {
    let method: Method = args.method.parse()?;
    let settings = args.methods.settings()?;
    let g = single(load_inputs(&args.input)?.1)?;
    let master = StreamSeed::new(seed).derive("select").derive(method.name()).child(0);
    let seeds = select_seeds(method, &g.graph, &g.partition, args.k, args.p, &settings, master)?;
    emit(args.out.as_deref(), &format_seeds(&seeds, Some(&g.node_ids)))
}

fn method_list(eval: &EvalArgs, settings: &MethodSettings) -> Result<Vec<Method>> {
    let mut methods: Vec<Method> = parse_list::<String>(&eval.method_list, "method")?
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;
    if settings.policy.is_some() && !methods.contains(&Method::Dq4FairIm) {
        methods.insert(0, Method::Dq4FairIm);
    }
    Ok(methods)
}

fn finish(table: &Comparison, eval: &EvalArgs) -> Result<Vec<fairspread::experiments::EvalRecord>> {
    for f in &table.failures {
        eprintln!("warning: method={} graph={} {}", f.method, f.graph_index, f.error);
    }
    if table.rows.is_empty() {
        let first = table.failures.first().map(|f| f.error.clone()).unwrap_or_default();
        return Err(invalid(format!("every method failed; first failure: {first}")));
    }
    let mut rows = table.rows.clone();
    if !eval.timing {
        rows.iter_mut().for_each(|r| r.seconds = 0.0);
    }
    Ok(rows)
}

fn cmd_evaluate(args: &EvaluateArgs, seed: u64) -> Result<()> {
    let eval = &args.eval;
    let (name, graphs) = load_inputs(&eval.input)?;
    let dataset = eval.dataset.clone().unwrap_or(name);
    if let Some(path) = &args.seeds {
        let g = single(graphs)?;
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let seeds = parse_seeds(&text, path, Some(&g.node_ids))?;
        let record = evaluate_seed_set(
            &g.graph,
            &g.partition,
            &seeds,
            args.p,
            eval.m_eval,
            StreamSeed::new(seed).derive("eval").child(0),
        )?
        .labelled("seed_file", &dataset);
        return emit(eval.out.as_deref(), &records_to_csv(&[record]));
    }
    let settings = eval.methods.settings()?;
    let methods = method_list(eval, &settings)?;
    let table = compare_methods(
        &test_set(dataset, &graphs),
        &methods,
        args.k,
        args.p,
        eval.m_eval,
        &settings,
        seed.into(),
    )?;
    emit(eval.out.as_deref(), &records_to_csv(&finish(&table, eval)?))
}

fn cmd_sweep(args: &SweepArgs, seed: u64) -> Result<()> {
    let eval = &args.eval;
    let (name, graphs) = load_inputs(&eval.input)?;
    let set = test_set(eval.dataset.clone().unwrap_or(name), &graphs);
    let settings = eval.methods.settings()?;
    let methods = method_list(eval, &settings)?;
    let (table, axis) = match args.sweep {
        SweepOver::K => (
            sweep_k(
                &set,
                &methods,
                &parse_list(&args.values, "k")?,
                args.p,
                eval.m_eval,
                &settings,
                seed.into(),
            )?,
            SweepAxis::K,
        ),
        SweepOver::P => (
            sweep_p(
                &set,
                &methods,
                &parse_list(&args.values, "p")?,
                args.k,
                eval.m_eval,
                &settings,
                seed.into(),
            )?,
            SweepAxis::P,
        ),
    };
    let rows = finish(&table, eval)?;
    if let Some(plot) = &args.plot {
        write(plot, &sweep_plot_csv(&rows, axis))?;
    }
    emit(eval.out.as_deref(), &records_to_csv(&rows))
}

fn cmd_ablate(args: &AblateArgs, seed: u64) -> Result<()> {
    let phis: Vec<f64> = if args.phis.trim().is_empty() {
        ABLATION_PHIS.to_vec()
    } else {
        parse_list(&args.phis, "phi")?
    };
    let (_, graphs) = load_inputs(&args.input)?;
    let pool: Vec<_> = graphs.into_iter().map(|g| (g.graph, g.partition)).collect();
    let runs = ablate_phi(&pool, &phis, &args.hyper.to_hp(seed), args.window)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    for run in &runs {
        write(&args.out.join(format!("report_phi{}.csv", run.phi)), &run.report.to_csv())?;
    }
    write(&args.out.join("ablation.csv"), &ablation_plot_csv(&runs, args.window))
}

/// Reads `key = value` lines into `--key=value` arguments.
fn config_args(path: &Path) -> Result<Vec<OsString>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "expected `key = value`".into(),
        })?;
        let key = key.trim().trim_start_matches('-').replace('_', "-");
        let value = value.trim();
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => out.push(format!("--{key}={value}").into()),
        }
    }
    Ok(out)
}

/// Inserts config-file flags right after the subcommand so that later
/// command-line flags override them.
fn expand_args(raw: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config = None;
    for (i, a) in raw.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config = raw.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        }
    }
    let Some(path) = config else { return Ok(raw) };
    const SUBCOMMANDS: [&str; 6] = ["generate", "train", "seeds", "evaluate", "sweep", "ablate"];
    let Some(pos) = raw.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref())) else {
        return Ok(raw);
    };
    let mut out = raw[..=pos].to_vec();
    out.extend(config_args(&path)?);
    out.extend_from_slice(&raw[pos + 1..]);
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(invalid("--jobs must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| invalid(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Generate(a) => cmd_generate(a, cli.seed),
        Command::Train(a) => cmd_train(a, cli.seed),
        Command::Seeds(a) => cmd_seeds(a, cli.seed),
        Command::Evaluate(a) => cmd_evaluate(a, cli.seed),
        Command::Sweep(a) => cmd_sweep(a, cli.seed),
        Command::Ablate(a) => cmd_ablate(a, cli.seed),
    }
}

fn fail(kind: &str, msg: &str) -> ExitCode {
    let msg = msg.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error: kind={kind} msg={msg}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let args = match expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return fail(e.kind(), &e.to_string()),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            return fail("usage", first);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
