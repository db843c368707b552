//! `rockgraph` command-line driver.
//!
//! Every subcommand writes machine-readable CSV/JSON outputs and a short
//! human summary on stdout. Exit codes: 0 success, 1 validation or numeric
//! failure, 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use rockgraph::config::MaterialConfig;
use rockgraph::corpus::{generate, write_corpus, CorpusSpec};
use rockgraph::dataset::{make_split, read_manifest, regression_report, write_parity_csv, Partition, Sample, Split, DEFAULT_RATIOS};
use rockgraph::effmed::{porosity_sweep, DemParams, ElasticModuli, DEFAULT_ASPECT_RATIO};
use rockgraph::ginnet::{train, write_history_csv, FeatureScaling, GinConfig, GinModel, TrainConfig};
use rockgraph::graphmetrics::{summarize, SUMMARY_FEATURE_NAMES};
use rockgraph::mapper::{build_graph, FilterAxis};
use rockgraph::modelfile::{ModelFile, Regressor};
use rockgraph::randomforest::{write_importance_csv, Forest, ForestParams, TreeParams};
use rockgraph::voxelgrid::{gen_sphere_pack, read_raw, write_raw};
use rockgraph::{Error, MapperParams, Result, RockGraph};

#[derive(Parser, Debug)]
#[command(name = "rockgraph", version, about = "Digital-rock graphs, effective-medium physics and graph regressors")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, env = "ROCKGRAPH_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a random sphere-pack voxel volume (.raw + .raw.hdr).
    Gen(GenArgs),
    /// Convert a voxel volume to a two-phase Mapper graph (JSON).
    Map(MapArgs),
    /// Write the 12 graph-level summary features of graphs as CSV.
    Metrics(MetricsArgs),
    /// Bounds and DEM moduli over a porosity sweep as CSV.
    Physics(PhysicsArgs),
    /// Generate a labeled synthetic corpus with a manifest.
    Corpus(CorpusArgs),
    /// Train the random forest on graph summaries.
    TrainRf(TrainRfArgs),
    /// Train the GIN regressor on Mapper graphs.
    TrainGnn(TrainGnnArgs),
    /// Predict moduli for graphs with a trained model.
    Predict(PredictArgs),
    /// Evaluate a trained model on a manifest partition.
    Eval(EvalArgs),
}

fn parse_overlap(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("overlap must lie in [0, 1), got {v}"))
    }
}

fn parse_unit_open(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("value must lie in [0, 1), got {v}"))
    }
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("value must be positive, got {v}"))
    }
}

fn parse_non_negative(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("value must be non-negative, got {v}"))
    }
}

fn parse_dims(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts = s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| format!("{e}"))).collect::<std::result::Result<Vec<_>, _>>()?;
    match parts[..] {
        [x, y, z] if x > 0 && y > 0 && z > 0 => Ok([x, y, z]),
        _ => Err(format!("expected three positive sizes `nx,ny,nz`, got `{s}`")),
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Axis {
    X,
    Y,
    Z,
}

impl From<Axis> for FilterAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::X => FilterAxis::X,
            Axis::Y => FilterAxis::Y,
            Axis::Z => FilterAxis::Z,
        }
    }
}

#[derive(Args, Debug)]
struct MapperArgs {
    /// Number of cover intervals along the filter axis.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    n_intervals: u64,
    /// Overlap fraction between consecutive intervals, in [0, 1).
    #[arg(long, default_value_t = 0.5, value_parser = parse_overlap)]
    overlap: f64,
    /// Filter axis.
    #[arg(long, value_enum, default_value_t = Axis::X)]
    filter: Axis,
}

impl MapperArgs {
    fn params(&self) -> Result<MapperParams> {
        Ok(MapperParams::new(self.n_intervals as usize, self.overlap)?.with_filter(self.filter.into()))
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Grid dimensions `nx,ny,nz`.
    #[arg(long, value_parser = parse_dims)]
    dims: [usize; 3],
    #[arg(long)]
    n_spheres: usize,
    #[arg(long, default_value_t = 3.0, value_parser = parse_positive)]
    radius_min: f64,
    #[arg(long, default_value_t = 6.0, value_parser = parse_positive)]
    radius_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output `.raw` path; the header goes to `<out>.hdr`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MapArgs {
    /// Input `.raw` volume (with `.raw.hdr` sidecar).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    mapper: MapperArgs,
    /// Output graph JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Graph JSON files.
    #[arg(long, num_args = 1.., required_unless_present = "manifest", conflicts_with = "manifest")]
    graphs: Vec<PathBuf>,
    /// Manifest whose graphs to summarize.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MaterialArgs {
    /// Material TOML (mineral, pore, DEM aspect ratio).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mineral bulk modulus in GPa (overrides the config).
    #[arg(long, value_parser = parse_positive)]
    mineral_k: Option<f64>,
    /// Mineral shear modulus in GPa (overrides the config).
    #[arg(long, value_parser = parse_positive)]
    mineral_mu: Option<f64>,
    /// Pore aspect ratio in (0, 1] (overrides the config).
    #[arg(long, value_parser = parse_positive)]
    alpha: Option<f64>,
}

impl MaterialArgs {
    fn dem_params(&self) -> Result<DemParams> {
        let base = match &self.config {
            Some(p) => MaterialConfig::load(p)?.dem_params()?,
            None => {
                let (Some(k), Some(mu)) = (self.mineral_k, self.mineral_mu) else {
                    return Err(Error::InvalidArgument("give --config or both --mineral-k and --mineral-mu".into()));
                };
                DemParams::new(ElasticModuli::new(k, mu)?, DEFAULT_ASPECT_RATIO)?
            }
        };
        let mineral = ElasticModuli::new(
            self.mineral_k.unwrap_or(base.mineral.k),
            self.mineral_mu.unwrap_or(base.mineral.mu),
        )?;
        let p = DemParams::new(mineral, self.alpha.unwrap_or(base.aspect_ratio))?.with_inclusion(base.inclusion);
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug)]
struct PhysicsArgs {
    #[command(flatten)]
    material: MaterialArgs,
    #[arg(long, default_value_t = 0.0, value_parser = parse_unit_open)]
    phi_min: f64,
    #[arg(long, default_value_t = 0.35, value_parser = parse_unit_open)]
    phi_max: f64,
    #[arg(long, default_value_t = 36, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    #[command(flatten)]
    material: MaterialArgs,
    #[arg(long, default_value_t = 500)]
    n_samples: usize,
    /// Subcube edge lengths, assigned round-robin.
    #[arg(long, value_delimiter = ',', default_values_t = [32usize, 48, 64])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3.0, value_parser = parse_positive)]
    radius_min: f64,
    #[arg(long, default_value_t = 6.0, value_parser = parse_positive)]
    radius_max: f64,
    #[arg(long, default_value_t = 0.05, value_parser = parse_unit_open)]
    porosity_min: f64,
    #[arg(long, default_value_t = 0.40, value_parser = parse_unit_open)]
    porosity_max: f64,
    /// Label noise standard deviation in GPa.
    #[arg(long, default_value_t = 0.5, value_parser = parse_non_negative)]
    noise_sigma: f64,
    #[command(flatten)]
    mapper: MapperArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the voxel volumes.
    #[arg(long)]
    with_voxels: bool,
    /// Output directory (graphs + manifest.csv).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Labeled manifest CSV.
    #[arg(long)]
    manifest: PathBuf,
    /// Seed of the 80:10:10 train/val/test split.
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    /// Optional text file listing the split.
    #[arg(long)]
    split_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainRfArgs {
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    n_trees: u64,
    /// Maximum depth; 0 means unlimited.
    #[arg(long, default_value_t = 12)]
    max_depth: usize,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    min_leaf: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    model_out: PathBuf,
    /// Feature-importance CSV.
    #[arg(long)]
    importance_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scaling {
    Raw,
    SizeNormalized,
}

#[derive(Args, Debug)]
struct TrainGnnArgs {
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = TrainConfig::default().epochs as u64, value_parser = clap::value_parser!(u64).range(1..))]
    epochs: u64,
    #[arg(long, default_value_t = TrainConfig::default().batch_size as u64, value_parser = clap::value_parser!(u64).range(1..))]
    batch_size: u64,
    #[arg(long, default_value_t = TrainConfig::default().lr, value_parser = parse_non_negative)]
    lr: f64,
    /// Dropout rate in the head, in [0, 1).
    #[arg(long, default_value_t = TrainConfig::default().dropout, value_parser = parse_unit_open)]
    dropout: f64,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    width: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    layers: u64,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    head_width: u64,
    #[arg(long, value_enum, default_value_t = Scaling::SizeNormalized)]
    feature_scaling: Scaling,
    /// Seed for weight initialization, shuffling and dropout.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    model_out: PathBuf,
    /// Per-epoch loss CSV (epoch, train_mse, val_mse).
    #[arg(long)]
    history_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    graphs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PartitionArg {
    Train,
    Val,
    Test,
    All,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = PartitionArg::Test)]
    partition: PartitionArg,
    /// Split seed; defaults to the one stored in the model file.
    #[arg(long)]
    split_seed: Option<u64>,
    /// Parity CSV (id, k_true, k_pred, mu_true, mu_pred).
    #[arg(long)]
    parity_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Map(a) => cmd_map(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Physics(a) => cmd_physics(a),
        Command::Corpus(a) => cmd_corpus(a),
        Command::TrainRf(a) => cmd_train_rf(a),
        Command::TrainGnn(a) => cmd_train_gnn(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let dims = a.dims;
    let grid = gen_sphere_pack(dims, a.n_spheres, (a.radius_min, a.radius_max), a.seed)?;
    write_raw(&grid, &a.out)?;
    println!("wrote {} ({}x{}x{}, porosity {:.4})", a.out.display(), dims[0], dims[1], dims[2], grid.porosity().value());
    Ok(())
}

fn cmd_map(a: MapArgs) -> Result<()> {
    let grid = read_raw(&a.input)?;
    let graph = build_graph(&grid, &a.mapper.params()?)?;
    graph.save(&a.out)?;
    let solid = graph.count_phase(rockgraph::Phase::Solid);
    println!(
        "wrote {}: {} nodes ({} solid, {} pore), {} edges",
        a.out.display(),
        graph.node_count(),
        solid,
        graph.node_count() - solid,
        graph.edges.len()
    );
    Ok(())
}

fn load_graphs(paths: &[PathBuf]) -> Result<Vec<RockGraph>> {
    paths.par_iter().map(|p| RockGraph::load(p)).collect()
}

fn cmd_metrics(a: MetricsArgs) -> Result<()> {
    let (ids, paths): (Vec<String>, Vec<PathBuf>) = match &a.manifest {
        Some(m) => read_manifest(m)?.into_iter().map(|s| (s.id, s.graph_path)).unzip(),
        None => a.graphs.iter().map(|p| (file_id(p), p.clone())).unzip(),
    };
    let graphs = load_graphs(&paths)?;
    let rows = graphs.par_iter().map(|g| Ok(summarize(g)?.features())).collect::<Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_path(&a.out)?;
    let mut header = vec!["id"];
    header.extend(SUMMARY_FEATURE_NAMES);
    w.write_record(&header)?;
    for (id, r) in ids.iter().zip(&rows) {
        let mut rec = vec![id.clone()];
        rec.extend(r.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    println!("wrote {} summary rows to {}", rows.len(), a.out.display());
    Ok(())
}

fn file_id(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_physics(a: PhysicsArgs) -> Result<()> {
    let params = a.material.dem_params()?;
    let rows = porosity_sweep(&params, a.phi_min, a.phi_max, a.steps as usize)?;
    let mut w = csv::Writer::from_path(&a.out)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    println!(
        "wrote {} rows to {} (mineral K={} mu={} GPa, alpha={})",
        rows.len(),
        a.out.display(),
        params.mineral.k,
        params.mineral.mu,
        params.aspect_ratio
    );
    Ok(())
}

fn cmd_corpus(a: CorpusArgs) -> Result<()> {
    let spec = CorpusSpec {
        n_samples: a.n_samples,
        sizes: a.sizes,
        radius_range: (a.radius_min, a.radius_max),
        porosity_range: (a.porosity_min, a.porosity_max),
        mapper: a.mapper.params()?,
        noise_sigma: a.noise_sigma,
        dem: a.material.dem_params()?,
        seed: a.seed,
    };
    let samples = generate(&spec)?;
    let manifest = write_corpus(&a.out, &samples, a.with_voxels)?;
    println!("wrote {} samples; manifest {}", samples.len(), manifest.display());
    Ok(())
}

/// Labeled samples, loaded graphs and the split of a manifest.
struct Labeled {
    samples: Vec<Sample>,
    graphs: Vec<RockGraph>,
    labels: Vec<ElasticModuli>,
}

impl Labeled {
    fn load(manifest: &Path) -> Result<Self> {
        let samples = read_manifest(manifest)?;
        if samples.is_empty() {
            return Err(Error::InvalidArgument(format!("manifest {} has no samples", manifest.display())));
        }
        let labels = samples.iter().map(Sample::require_labels).collect::<Result<Vec<_>>>()?;
        let paths: Vec<PathBuf> = samples.iter().map(|s| s.graph_path.clone()).collect();
        let graphs = load_graphs(&paths)?;
        Ok(Labeled { samples, graphs, labels })
    }

    fn ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.id.clone()).collect()
    }

    fn indices(&self, ids: &[String]) -> Vec<usize> {
        let pos: std::collections::HashMap<&str, usize> =
            self.samples.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
        ids.iter().map(|id| pos[id.as_str()]).collect()
    }

    fn split(&self, seed: u64, out: Option<&Path>) -> Result<Split> {
        let split = make_split(&self.ids(), DEFAULT_RATIOS, seed)?;
        if let Some(p) = out {
            std::fs::write(p, split.to_text())?;
        }
        Ok(split)
    }
}

fn cmd_train_rf(a: TrainRfArgs) -> Result<()> {
    let data = Labeled::load(&a.split.manifest)?;
    let split = data.split(a.split.split_seed, a.split.split_out.as_deref())?;
    let train_idx = data.indices(&split.train);
    if train_idx.is_empty() {
        return Err(Error::InvalidArgument("training partition is empty".into()));
    }
    let x = train_idx.iter().map(|&i| Ok(summarize(&data.graphs[i])?.features().to_vec())).collect::<Result<Vec<_>>>()?;
    let y: Vec<[f64; 2]> = train_idx.iter().map(|&i| [data.labels[i].k, data.labels[i].mu]).collect();
    let params = ForestParams {
        n_trees: a.n_trees as usize,
        tree: TreeParams {
            max_depth: (a.max_depth > 0).then_some(a.max_depth),
            min_leaf: a.min_leaf as usize,
            bootstrap: true,
        },
        seed: a.seed,
    };
    let forest = Forest::fit(&x, &y, &SUMMARY_FEATURE_NAMES, params)?;
    let importance = forest.feature_importance();
    if let Some(p) = &a.importance_out {
        write_importance_csv(p, &forest.feature_names, &importance)?;
    }
    let file = ModelFile::new(a.split.split_seed, Regressor::RandomForest { forest });
    file.save(&a.model_out)?;
    println!("trained {} trees on {} samples; model {}", params.n_trees, train_idx.len(), a.model_out.display());
    report(&file, &data, &data.indices(&split.val), "val", None)
}

fn cmd_train_gnn(a: TrainGnnArgs) -> Result<()> {
    let data = Labeled::load(&a.split.manifest)?;
    let split = data.split(a.split.split_seed, a.split.split_out.as_deref())?;
    let set = |ids: &[String]| -> Vec<(RockGraph, ElasticModuli)> {
        data.indices(ids).into_iter().map(|i| (data.graphs[i].clone(), data.labels[i])).collect()
    };
    let (train_set, val_set) = (set(&split.train), set(&split.val));
    let config = GinConfig {
        width: a.width as usize,
        n_layers: a.layers as usize,
        head_width: a.head_width as usize,
        ..GinConfig::default()
    };
    let scaling = match a.feature_scaling {
        Scaling::Raw => FeatureScaling::Raw,
        Scaling::SizeNormalized => FeatureScaling::SizeNormalized,
    };
    let train_cfg = TrainConfig {
        epochs: a.epochs as usize,
        batch_size: a.batch_size as usize,
        lr: a.lr,
        dropout: a.dropout,
        seed: a.seed,
    };
    let mut model = GinModel::new(config, scaling, a.seed)?;
    let history = train(&mut model, &train_set, &val_set, &train_cfg)?;
    if let Some(p) = &a.history_out {
        write_history_csv(p, &history)?;
    }
    let best = history.records[history.best_epoch];
    println!(
        "trained {} epochs on {} graphs; best epoch {} (train MSE {:.4}, val MSE {:.4}); model {}",
        train_cfg.epochs,
        train_set.len(),
        best.epoch,
        best.train_mse,
        best.val_mse,
        a.model_out.display()
    );
    let file = ModelFile::new(a.split.split_seed, Regressor::Gin { model, train: train_cfg, history });
    file.save(&a.model_out)?;
    report(&file, &data, &data.indices(&split.val), "val", None)
}

fn report(file: &ModelFile, data: &Labeled, idx: &[usize], name: &str, parity: Option<&Path>) -> Result<()> {
    if idx.is_empty() {
        println!("{name}: no samples");
        return Ok(());
    }
    let pred = idx.par_iter().map(|&i| file.predict(&data.graphs[i])).collect::<Result<Vec<_>>>()?;
    let truth: Vec<ElasticModuli> = idx.iter().map(|&i| data.labels[i]).collect();
    if let Some(p) = parity {
        let ids: Vec<String> = idx.iter().map(|&i| data.samples[i].id.clone()).collect();
        write_parity_csv(p, &ids, &truth, &pred)?;
    }
    match regression_report(&pred, &truth) {
        Ok(r) => println!(
            "{name} ({} samples): R2_K={:.4} R2_mu={:.4} MSE_K={:.4} MSE_mu={:.4}",
            idx.len(),
            r.r2_k,
            r.r2_mu,
            r.mse_k,
            r.mse_mu
        ),
        Err(e) => println!("{name} ({} samples): metrics unavailable: {e}", idx.len()),
    }
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let file = ModelFile::load(&a.model)?;
    let graphs = load_graphs(&a.graphs)?;
    let preds = graphs.par_iter().map(|g| file.predict(g)).collect::<Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_path(&a.out)?;
    w.write_record(["id", "k_gpa", "mu_gpa"])?;
    for (p, m) in a.graphs.iter().zip(&preds) {
        w.write_record([file_id(p), m.k.to_string(), m.mu.to_string()])?;
    }
    w.flush()?;
    println!("wrote {} predictions ({} model) to {}", preds.len(), file.kind(), a.out.display());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let file = ModelFile::load(&a.model)?;
    let data = Labeled::load(&a.manifest)?;
    let split = data.split(a.split_seed.unwrap_or(file.split_seed), None)?;
    let (idx, name) = match a.partition {
        PartitionArg::Train => (data.indices(split.ids(Partition::Train)), "train"),
        PartitionArg::Val => (data.indices(split.ids(Partition::Val)), "val"),
        PartitionArg::Test => (data.indices(split.ids(Partition::Test)), "test"),
        PartitionArg::All => ((0..data.samples.len()).collect(), "all"),
    };
    report(&file, &data, &idx, name, a.parity_out.as_deref())
}
