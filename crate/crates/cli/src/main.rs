//! `gfs`: score feature columns of an attributed graph, partition them,
//! train the dual-channel reference models, and run the experiment
//! protocols, all from dataset directories on disk.

mod dataset_io;
mod reports;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use gfs_core::homophily::{
    h_adj, h_attr, h_class, h_class_controlled, h_edge, h_generalized_edge, h_local_sim, h_node,
};
use gfs_core::{
    generate_synthetic, run_binning, run_embedding_reuse, run_metric_comparison, run_ratio_sweep,
    run_supervision_sweep, run_swap, select_features, tfi_report, CtfSampling, Dataset,
    ExperimentConfig, MiEstimatorConfig, ModelConfig, ModelKind, SelectionConfig, SelectorKind,
    SimilarityMode, SynthConfig,
};

use dataset_io::{load_dataset, save_dataset, CliError, Result};
use reports::{write_csv, write_report};

/// Seed offset for supervision-subset shuffles, shared with the
/// experiment protocols so CLI fractions and sweep fractions pick the
/// same rows.
const SUPERVISION_SEED_OFFSET: u64 = 0x50b5;

#[derive(Parser)]
#[command(
    name = "gfs",
    version,
    about = "Topological feature informativeness and graph feature selection"
)]
struct Cli {
    /// Flat key=value file supplying defaults; flags win over file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark dataset directory.
    Synth(SynthArgs),
    /// Score every feature column and write a report.
    Tfi(TfiArgs),
    /// Compute homophily metrics of a dataset.
    Homophily(HomophilyArgs),
    /// Partition columns into favored and disfavored sets.
    Select(SelectArgs),
    /// Train a reference model and report its metrics.
    Train(TrainArgs),
    /// Run an experiment protocol over a dataset.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    communities: Option<usize>,
    /// Attach an i.i.d. per-node bit to the label (doubles the classes).
    #[arg(long)]
    bit_factor: Option<bool>,
    #[arg(long)]
    p_intra: Option<f64>,
    #[arg(long)]
    p_inter: Option<f64>,
    /// Number of aggregation-favored columns.
    #[arg(long)]
    favored: Option<usize>,
    /// Number of aggregation-disfavored columns.
    #[arg(long)]
    disfavored: Option<usize>,
    /// Number of near-noise columns.
    #[arg(long)]
    noise: Option<usize>,
    /// Standard deviation of the noise on signal columns.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Dataset name recorded in meta.json.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct TfiArgs {
    dataset: PathBuf,
    #[arg(long)]
    k_hop: Option<usize>,
    /// Neighbor order of the mutual-information estimator.
    #[arg(long)]
    mi_k: Option<usize>,
    /// Label rows the score may see: 'train', 'all', or a fraction of
    /// the training split.
    #[arg(long)]
    supervision: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of columns routed to the convolutional channel.
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write a plot-ready per-feature CSV table.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct HomophilyArgs {
    dataset: PathBuf,
    /// Comma-separated list out of: edge, node, class, adjusted,
    /// generalized-edge, local-sim-cos, local-sim-euc, attribute,
    /// class-controlled. Defaults to all of them.
    #[arg(long)]
    metrics: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    dataset: PathBuf,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    k_hop: Option<usize>,
    #[arg(long)]
    mi_k: Option<usize>,
    #[arg(long)]
    supervision: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    dataset: PathBuf,
    /// One of mlp, gcn, gfs, gate-soft, gate-hard.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    skip: Option<bool>,
    #[arg(long)]
    layer_norm: Option<bool>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k_hop: Option<usize>,
    #[arg(long)]
    mi_k: Option<usize>,
    #[arg(long)]
    supervision: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(subcommand)]
    protocol: Protocol,
}

#[derive(Subcommand)]
enum Protocol {
    /// Per-bin difference between the graph and dense models.
    Bin(BinArgs),
    /// Accuracy across favored-ratio values, argmax marked.
    RatioSweep(RatioSweepArgs),
    /// Normal versus swapped channel routing.
    Swap(ProtocolArgs),
    /// Partition stability and accuracy under label subsets.
    Supervision(SupervisionArgs),
    /// Fused pipeline with different column selectors.
    CompareMetrics(CompareMetricsArgs),
    /// Selection rerun on pretrained embeddings.
    EmbedReuse(EmbedReuseArgs),
}

#[derive(Args)]
struct ProtocolArgs {
    dataset: PathBuf,
    /// Base seed; runs use seed, seed+1, ... seed+num-seeds-1.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    num_seeds: Option<usize>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    k_hop: Option<usize>,
    #[arg(long)]
    mi_k: Option<usize>,
    #[arg(long)]
    supervision: Option<String>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BinArgs {
    #[command(flatten)]
    common: ProtocolArgs,
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args)]
struct RatioSweepArgs {
    #[command(flatten)]
    common: ProtocolArgs,
    /// Comma-separated r values; 0 is the dense model, 1 the graph model.
    #[arg(long)]
    ratios: Option<String>,
}

#[derive(Args)]
struct SupervisionArgs {
    #[command(flatten)]
    common: ProtocolArgs,
    /// Comma-separated label fractions in (0, 1].
    #[arg(long)]
    fractions: Option<String>,
}

#[derive(Args)]
struct CompareMetricsArgs {
    #[command(flatten)]
    common: ProtocolArgs,
    /// Comma-separated list out of: tfi, h_ge, h_attr, h_ls_cos,
    /// h_ls_euc, h_ctf, gate_soft, gate_hard, none.
    #[arg(long)]
    selectors: Option<String>,
}

#[derive(Args)]
struct EmbedReuseArgs {
    #[command(flatten)]
    common: ProtocolArgs,
    /// Model whose penultimate activations become the feature space:
    /// mlp or gcn.
    #[arg(long)]
    pretrain: Option<String>,
}

/// Keys accepted in the key=value config file; the union over all
/// subcommands, so one file can serve a whole pipeline.
const KNOWN_KEYS: &[&str] = &[
    "seed",
    "k-hop",
    "mi-k",
    "supervision",
    "ratio",
    "model",
    "layers",
    "hidden",
    "dropout",
    "learning-rate",
    "weight-decay",
    "epochs",
    "skip",
    "layer-norm",
    "bins",
    "num-seeds",
    "ratios",
    "fractions",
    "selectors",
    "pretrain",
    "metrics",
    "nodes",
    "communities",
    "bit-factor",
    "p-intra",
    "p-inter",
    "favored",
    "disfavored",
    "noise",
    "sigma",
    "name",
];

#[derive(Debug)]
struct Resolver {
    file: BTreeMap<String, String>,
}

impl Resolver {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    CliError::Usage(format!(
                        "config file {}:{}: expected key=value",
                        path.display(),
                        idx + 1
                    ))
                })?;
                let key = key.trim();
                if !KNOWN_KEYS.contains(&key) {
                    return Err(CliError::Usage(format!(
                        "config file {}:{}: unknown key '{key}'",
                        path.display(),
                        idx + 1
                    )));
                }
                file.insert(key.to_string(), value.trim().to_string());
            }
        }
        Ok(Resolver { file })
    }

    /// flag > config file > default.
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get_opt(flag, key)?.unwrap_or(default))
    }

    fn get_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                CliError::Usage(format!("config key '{key}': bad value '{raw}': {e}"))
            }),
            None => Ok(None),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Supervision {
    Train,
    All,
    Fraction(f64),
}

impl FromStr for Supervision {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Supervision::Train),
            "all" => Ok(Supervision::All),
            other => {
                let f: f64 = other.parse().map_err(|_| {
                    CliError::Usage(format!(
                        "supervision must be 'train', 'all', or a fraction, got '{other}'"
                    ))
                })?;
                if !(0.0 < f && f <= 1.0) {
                    return Err(CliError::Usage(format!(
                        "supervision fraction must lie in (0, 1], got {f}"
                    )));
                }
                Ok(Supervision::Fraction(f))
            }
        }
    }
}

impl fmt::Display for Supervision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Supervision::Train => write!(f, "train"),
            Supervision::All => write!(f, "all"),
            Supervision::Fraction(v) => write!(f, "{v}"),
        }
    }
}

impl Supervision {
    fn indices(&self, data: &Dataset, seed: u64) -> Option<Vec<usize>> {
        match self {
            Supervision::All => None,
            Supervision::Train => Some(data.split.train.clone()),
            Supervision::Fraction(f) => {
                let mut pool = data.split.train.clone();
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seed.wrapping_add(SUPERVISION_SEED_OFFSET));
                pool.shuffle(&mut rng);
                let take = ((f * pool.len() as f64).ceil() as usize)
                    .max(1)
                    .min(pool.len());
                let mut subset = pool[..take].to_vec();
                subset.sort_unstable();
                Some(subset)
            }
        }
    }
}

struct SelectionSettings {
    config: SelectionConfig,
    supervision: Supervision,
    seed: u64,
}

impl SelectionSettings {
    fn echo(&self) -> Value {
        json!({
            "k_hop": self.config.k_hop,
            "mi_k": self.config.mi.k_nn,
            "ratio": self.config.ratio_r,
            "seed": self.seed,
            "supervision": self.supervision.to_string(),
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn build_selection(
    resolver: &Resolver,
    data: &Dataset,
    k_hop: Option<usize>,
    mi_k: Option<usize>,
    supervision: Option<String>,
    seed: Option<u64>,
    ratio: Option<f64>,
) -> Result<SelectionSettings> {
    let seed = resolver.get(seed, "seed", 0u64)?;
    let supervision: Supervision = resolver
        .get(supervision, "supervision", "train".to_string())?
        .parse()?;
    let defaults = SelectionConfig::default();
    let config = SelectionConfig {
        ratio_r: resolver.get(ratio, "ratio", defaults.ratio_r)?,
        k_hop: resolver.get(k_hop, "k-hop", defaults.k_hop)?,
        mi: MiEstimatorConfig {
            k_nn: resolver.get(mi_k, "mi-k", defaults.mi.k_nn)?,
            seed,
            ..defaults.mi
        },
        supervision_indices: supervision.indices(data, seed),
    };
    Ok(SelectionSettings {
        config,
        supervision,
        seed,
    })
}

fn run_synth(resolver: &Resolver, args: SynthArgs) -> Result<()> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        num_nodes: resolver.get(args.nodes, "nodes", d.num_nodes)?,
        num_communities: resolver.get(args.communities, "communities", d.num_communities)?,
        bit_factor: resolver.get(args.bit_factor, "bit-factor", d.bit_factor)?,
        p_intra: resolver.get(args.p_intra, "p-intra", d.p_intra)?,
        p_inter: resolver.get(args.p_inter, "p-inter", d.p_inter)?,
        m_favored: resolver.get(args.favored, "favored", d.m_favored)?,
        m_disfavored: resolver.get(args.disfavored, "disfavored", d.m_disfavored)?,
        m_noise: resolver.get(args.noise, "noise", d.m_noise)?,
        signal_noise_sigma: resolver.get(args.sigma, "sigma", d.signal_noise_sigma)?,
        seed: resolver.get(args.seed, "seed", d.seed)?,
    };
    let name = resolver.get_opt(args.name, "name")?;
    let synth = generate_synthetic(&cfg)?;
    save_dataset(&args.out, &synth.dataset, name.as_deref())?;
    println!(
        "wrote {} ({} nodes, {} edges, {} columns, {} classes)",
        args.out.display(),
        synth.dataset.graph.num_nodes(),
        synth.dataset.graph.num_edges(),
        synth.dataset.features.num_features(),
        synth.dataset.labels.num_classes(),
    );
    Ok(())
}

fn run_tfi(resolver: &Resolver, args: TfiArgs) -> Result<()> {
    let settings_seed = resolver.get(args.seed.clone(), "seed", 0u64)?;
    let data = load_dataset(&args.dataset, settings_seed)?;
    let settings = build_selection(
        resolver,
        &data,
        args.k_hop,
        args.mi_k,
        args.supervision,
        args.seed,
        args.ratio,
    )?;
    let report = tfi_report(&data.graph, &data.features, &data.labels, &settings.config)?;

    if let Some(csv_path) = &args.csv {
        let mut rank_of = vec![0usize; report.tfi.len()];
        for (rank, &j) in report.ranking.iter().enumerate() {
            rank_of[j] = rank + 1;
        }
        let favored: std::collections::BTreeSet<usize> = report.favored.iter().copied().collect();
        let rows: Vec<Vec<String>> = (0..report.tfi.len())
            .map(|j| {
                vec![
                    j.to_string(),
                    report.tfi[j].to_string(),
                    report.fano_bounds[j].to_string(),
                    rank_of[j].to_string(),
                    favored.contains(&j).to_string(),
                ]
            })
            .collect();
        write_csv(csv_path, "feature,tfi,fano_bound,rank,favored", &rows)?;
    }

    let mut config = settings.echo();
    config["dataset"] = json!(args.dataset.display().to_string());
    write_report(&args.out, "tfi", &config, &report)
}

fn run_homophily(resolver: &Resolver, args: HomophilyArgs) -> Result<()> {
    const ALL: &str =
        "edge,node,class,adjusted,generalized-edge,local-sim-cos,local-sim-euc,attribute,class-controlled";
    let seed = resolver.get(args.seed, "seed", 0u64)?;
    let data = load_dataset(&args.dataset, seed)?;
    let list = resolver.get(args.metrics, "metrics", ALL.to_string())?;
    let mut values = serde_json::Map::new();
    for metric in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let value: Value = match metric {
            "edge" => json!(h_edge(&data.graph, &data.labels)?),
            "node" => json!(h_node(&data.graph, &data.labels)?),
            "class" => json!(h_class(&data.graph, &data.labels)?),
            "adjusted" => json!(h_adj(&data.graph, &data.labels)?),
            "generalized-edge" => json!(h_generalized_edge(&data.graph, &data.features)?),
            "local-sim-cos" => {
                json!(h_local_sim(&data.graph, &data.features, SimilarityMode::Cosine)?)
            }
            "local-sim-euc" => json!(h_local_sim(
                &data.graph,
                &data.features,
                SimilarityMode::NegEuclidean
            )?),
            "attribute" => {
                let report = h_attr(&data.graph, &data.features)?;
                json!({"value": report.scalar_value, "per_feature": report.per_feature})
            }
            "class-controlled" => json!(h_class_controlled(
                &data.graph,
                &data.features,
                &data.labels,
                CtfSampling::Auto,
            )?),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown metric '{other}'; expected one of {ALL}"
                )));
            }
        };
        values.insert(metric.replace('-', "_"), value);
    }
    let config = json!({
        "dataset": args.dataset.display().to_string(),
        "metrics": list,
        "seed": seed,
    });
    write_report(&args.out, "homophily", &config, &Value::Object(values))
}

fn run_select(resolver: &Resolver, args: SelectArgs) -> Result<()> {
    let seed = resolver.get(args.seed.clone(), "seed", 0u64)?;
    let data = load_dataset(&args.dataset, seed)?;
    let settings = build_selection(
        resolver,
        &data,
        args.k_hop,
        args.mi_k,
        args.supervision,
        args.seed,
        args.ratio,
    )?;
    let report = tfi_report(&data.graph, &data.features, &data.labels, &settings.config)?;
    let mut config = settings.echo();
    config["dataset"] = json!(args.dataset.display().to_string());
    write_report(&args.out, "select", &config, &report)
}

#[derive(serde::Serialize)]
struct TrainPayload {
    model: String,
    best_epoch: usize,
    best_val_metric: f64,
    test_at_best: f64,
    final_train_loss: f64,
    final_val_metric: f64,
    final_test_metric: f64,
    history: TrainHistory,
    #[serde(skip_serializing_if = "Option::is_none")]
    favored: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    graph_shares: Option<Vec<f64>>,
}

#[derive(serde::Serialize)]
struct TrainHistory {
    train_loss: Vec<f64>,
    val_metric: Vec<f64>,
    test_metric: Vec<f64>,
}

fn parse_model(name: &str) -> Result<ModelKind> {
    name.replace('-', "_").parse().map_err(|_| {
        CliError::Usage(format!(
            "unknown model '{name}'; expected mlp, gcn, gfs, gate-soft, or gate-hard"
        ))
    })
}

fn run_train(resolver: &Resolver, args: TrainArgs) -> Result<()> {
    let name = resolver
        .get_opt(args.model, "model")?
        .ok_or_else(|| CliError::Usage("missing --model (or 'model' in the config file)".into()))?;
    let kind = parse_model(&name)?;
    let seed = resolver.get(args.seed.clone(), "seed", 0u64)?;
    let data = load_dataset(&args.dataset, seed)?;
    let settings = build_selection(
        resolver,
        &data,
        args.k_hop,
        args.mi_k,
        args.supervision,
        args.seed,
        args.ratio,
    )?;
    let d = ModelConfig::default();
    let model_cfg = ModelConfig {
        num_layers: resolver.get(args.layers, "layers", d.num_layers)?,
        hidden_dim: resolver.get(args.hidden, "hidden", d.hidden_dim)?,
        dropout: resolver.get(args.dropout, "dropout", d.dropout)?,
        learning_rate: resolver.get(args.learning_rate, "learning-rate", d.learning_rate)?,
        weight_decay: resolver.get(args.weight_decay, "weight-decay", d.weight_decay)?,
        epochs: resolver.get(args.epochs, "epochs", d.epochs)?,
        seed,
        use_skip: resolver.get(args.skip, "skip", d.use_skip)?,
        use_layer_norm: resolver.get(args.layer_norm, "layer-norm", d.use_layer_norm)?,
    };

    let partition = if kind == ModelKind::Gfs {
        let tfi = gfs_core::compute_tfi(&data.graph, &data.features, &data.labels, &settings.config)?;
        let (favored, disfavored, _) = select_features(&tfi, settings.config.ratio_r)?;
        Some((favored, disfavored))
    } else {
        None
    };
    let part_ref = partition
        .as_ref()
        .map(|(f, v)| (f.as_slice(), v.as_slice()));
    let outcome = gfs_core::train(kind, &data, part_ref, &model_cfg)?;
    let graph_shares = outcome.model.gate.as_ref().map(|g| g.graph_shares());

    let payload = TrainPayload {
        model: kind.as_str().to_string(),
        best_epoch: outcome.best_epoch,
        best_val_metric: outcome.best_val_metric,
        test_at_best: outcome.test_at_best,
        final_train_loss: *outcome.train_loss.last().unwrap(),
        final_val_metric: *outcome.val_metric.last().unwrap(),
        final_test_metric: *outcome.test_metric.last().unwrap(),
        history: TrainHistory {
            train_loss: outcome.train_loss,
            val_metric: outcome.val_metric,
            test_metric: outcome.test_metric,
        },
        favored: partition.map(|(f, _)| f),
        graph_shares,
    };
    let mut config = settings.echo();
    config["dataset"] = json!(args.dataset.display().to_string());
    config["model"] = json!(kind.as_str());
    config["layers"] = json!(model_cfg.num_layers);
    config["hidden"] = json!(model_cfg.hidden_dim);
    config["dropout"] = json!(model_cfg.dropout);
    config["learning_rate"] = json!(model_cfg.learning_rate);
    config["weight_decay"] = json!(model_cfg.weight_decay);
    config["epochs"] = json!(model_cfg.epochs);
    config["skip"] = json!(model_cfg.use_skip);
    config["layer_norm"] = json!(model_cfg.use_layer_norm);
    write_report(&args.out, "train", &config, &payload)
}

fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| CliError::Usage(format!("bad {what} '{s}': {e}")))
        })
        .collect()
}

struct ExperimentSetup {
    data: Dataset,
    config: ExperimentConfig,
    echo: Value,
    out: PathBuf,
}

fn build_experiment(resolver: &Resolver, args: ProtocolArgs) -> Result<ExperimentSetup> {
    let seed = resolver.get(args.seed.clone(), "seed", 0u64)?;
    let data = load_dataset(&args.dataset, seed)?;
    let settings = build_selection(
        resolver,
        &data,
        args.k_hop,
        args.mi_k,
        args.supervision,
        args.seed,
        args.ratio,
    )?;
    let num_seeds = resolver.get(args.num_seeds, "num-seeds", 5usize)?;
    if num_seeds == 0 {
        return Err(CliError::Usage("num-seeds must be at least 1".into()));
    }
    let defaults = ExperimentConfig::default();
    let model = ModelConfig {
        num_layers: resolver.get(args.layers, "layers", defaults.model.num_layers)?,
        hidden_dim: resolver.get(args.hidden, "hidden", defaults.model.hidden_dim)?,
        dropout: resolver.get(args.dropout, "dropout", defaults.model.dropout)?,
        learning_rate: resolver.get(
            args.learning_rate,
            "learning-rate",
            defaults.model.learning_rate,
        )?,
        epochs: resolver.get(args.epochs, "epochs", defaults.model.epochs)?,
        ..defaults.model
    };
    let seeds: Vec<u64> = (0..num_seeds as u64).map(|i| seed.wrapping_add(i)).collect();
    let mut echo = settings.echo();
    echo["dataset"] = json!(args.dataset.display().to_string());
    echo["seeds"] = json!(seeds);
    echo["layers"] = json!(model.num_layers);
    echo["hidden"] = json!(model.hidden_dim);
    echo["dropout"] = json!(model.dropout);
    echo["learning_rate"] = json!(model.learning_rate);
    echo["epochs"] = json!(model.epochs);
    Ok(ExperimentSetup {
        data,
        config: ExperimentConfig {
            model,
            selection: settings.config,
            seeds,
        },
        echo,
        out: args.out,
    })
}

fn run_experiment(resolver: &Resolver, args: ExperimentArgs) -> Result<()> {
    match args.protocol {
        Protocol::Bin(a) => {
            let mut setup = build_experiment(resolver, a.common)?;
            let bins = resolver.get(a.bins, "bins", 10usize)?;
            setup.echo["bins"] = json!(bins);
            let report = run_binning(&setup.data, bins, &setup.config)?;
            write_report(&setup.out, "experiment bin", &setup.echo, &report)
        }
        Protocol::RatioSweep(a) => {
            let mut setup = build_experiment(resolver, a.common)?;
            let raw = resolver.get(
                a.ratios,
                "ratios",
                "0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0".to_string(),
            )?;
            let ratios: Vec<f64> = parse_list(&raw, "ratio")?;
            setup.echo["ratios"] = json!(ratios);
            let report = run_ratio_sweep(&setup.data, &ratios, &setup.config)?;
            write_report(&setup.out, "experiment ratio-sweep", &setup.echo, &report)
        }
        Protocol::Swap(a) => {
            let setup = build_experiment(resolver, a)?;
            let report = run_swap(&setup.data, &setup.config)?;
            write_report(&setup.out, "experiment swap", &setup.echo, &report)
        }
        Protocol::Supervision(a) => {
            let mut setup = build_experiment(resolver, a.common)?;
            let raw = resolver.get(a.fractions, "fractions", "0.1,0.3,0.5,0.7,1.0".to_string())?;
            let fractions: Vec<f64> = parse_list(&raw, "fraction")?;
            setup.echo["fractions"] = json!(fractions);
            let report = run_supervision_sweep(&setup.data, &fractions, &setup.config)?;
            write_report(&setup.out, "experiment supervision", &setup.echo, &report)
        }
        Protocol::CompareMetrics(a) => {
            let mut setup = build_experiment(resolver, a.common)?;
            let raw = resolver.get(
                a.selectors,
                "selectors",
                SelectorKind::ALL
                    .iter()
                    .map(|k| k.as_str())
                    .collect::<Vec<_>>()
                    .join(","),
            )?;
            let selectors: Vec<SelectorKind> = raw
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<SelectorKind>()
                        .map_err(|e| CliError::Usage(e.to_string()))
                })
                .collect::<Result<_>>()?;
            setup.echo["selectors"] = json!(raw);
            let report = run_metric_comparison(&setup.data, &selectors, &setup.config)?;
            write_report(&setup.out, "experiment compare-metrics", &setup.echo, &report)
        }
        Protocol::EmbedReuse(a) => {
            let mut setup = build_experiment(resolver, a.common)?;
            let pretrain_raw = resolver.get(a.pretrain, "pretrain", "gcn".to_string())?;
            let pretrain = parse_model(&pretrain_raw)?;
            setup.echo["pretrain"] = json!(pretrain.as_str());
            let report = run_embedding_reuse(&setup.data, pretrain, &setup.config)?;
            write_report(&setup.out, "experiment embed-reuse", &setup.echo, &report)
        }
    }
}

fn try_main() -> Result<()> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let line = e
                .to_string()
                .lines()
                .next()
                .unwrap_or("bad arguments")
                .trim_start_matches("error: ")
                .to_string();
            return Err(CliError::Usage(line));
        }
    };
    let resolver = Resolver::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth(args) => run_synth(&resolver, args),
        Command::Tfi(args) => run_tfi(&resolver, args),
        Command::Homophily(args) => run_homophily(&resolver, args),
        Command::Select(args) => run_select(&resolver, args),
        Command::Train(args) => run_train(&resolver, args),
        Command::Experiment(args) => run_experiment(&resolver, args),
    }
}

fn main() {
    let code = match try_main() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
