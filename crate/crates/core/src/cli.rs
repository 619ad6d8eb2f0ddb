//! Command-line front end. Every command writes its artifacts and a `manifest.json`
//! into `--out`; `replay` re-runs a manifest into another directory.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::complexity::{complexity_measure, count_regions_grid, expanded_box, lambda_diagnostics, region_upper_bound};
use crate::error::{Error, Result};
use crate::experiments::{
    compare_regularizers, init_network, load_dataset, trace_training, DataSplit, DatasetSource, PenaltySet,
    RegionGrid,
};
use crate::lann::{build_lann, BuildConfig, BuildTrace, LannModel};
use crate::network::DenseNetwork;
use crate::propagation::{ablation_flip_rate, PropagationReport};
use crate::structure::Structure;
use crate::train::{train, Regularizer, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "lannlab", version, about = "Complexity of curve-activation networks via linear approximation")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    #[arg(long, env = "LANNLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// moons[:N[:NOISE]], csv:PATH[:LABEL_COL] or idx:IMAGES:LABELS.
    #[arg(long, default_value = "moons")]
    pub dataset: String,
    /// Min-max scale features to [-1, 1] using the training bounds.
    #[arg(long)]
    pub scale: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 2000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.02)]
    pub lr: f64,
    /// Mini-batch size for SGD.
    #[arg(long, default_value_t = 32)]
    pub minibatch: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LannArgs {
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    /// Neurons updated per build iteration.
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    /// Distribution grid size.
    #[arg(long, default_value_t = 200)]
    pub nt: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
}

impl LannArgs {
    fn config(&self, seed: u64) -> BuildConfig {
        BuildConfig {
            lambda: self.lambda,
            batch: self.batch,
            grid_size: self.nt,
            max_iterations: self.max_iterations,
            seed,
            ..BuildConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegKind {
    None,
    L1,
    L2,
    CustomL1,
    Prune,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Train a network given by a structure string such as L3M(32,128,16)_T.
    Train {
        #[arg(long)]
        structure: String,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        training: TrainArgs,
        #[arg(long, value_enum, default_value = "none")]
        reg: RegKind,
        /// Penalty weight for l1, l2 and custom-l1.
        #[arg(long, default_value_t = 1e-4)]
        penalty: f64,
        #[arg(long, default_value_t = 5.0)]
        prune_percent: f64,
        #[arg(long, default_value_t = 100)]
        prune_period: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Build a LANN for a trained model.
    BuildLann {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        lann: LannArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Complexity measure of a built LANN.
    Complexity {
        #[arg(long)]
        model: PathBuf,
        /// Defaults to the lambda the LANN was built with.
        #[arg(long)]
        lambda: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Train while measuring complexity and accuracies.
    TraceTraining {
        #[arg(long)]
        structure: String,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        training: TrainArgs,
        #[arg(long, default_value_t = 100)]
        measure_every: usize,
        #[command(flatten)]
        lann: LannArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Flip rate of predictions when random neurons of a layer are removed.
    Ablate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// 1-based hidden layer; all layers when omitted.
        #[arg(long)]
        layer: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        fraction: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Count linear regions of a LANN on a grid and compare with the bound.
    Regions {
        #[arg(long)]
        model: PathBuf,
        /// Box as lo:hi per dimension, comma separated (e.g. -1.5:2.5,-1:1.5).
        #[arg(long, allow_hyphen_values = true)]
        r#box: Option<String>,
        /// Dataset whose widened bounding box is used when --box is absent.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        box_fraction: f64,
        #[arg(long, default_value_t = 1000)]
        resolution: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Smoothed error, gain and curvature of a build trace, with a suggested lambda.
    Diagnostics {
        /// Build trace CSV.
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Per-neuron expected error, amplification and accumulated error of a LANN.
    Propagation {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train with no regularizer, L1, L2, customized L1 and pruning and compare.
    CompareRegularizers {
        #[arg(long, default_value = "L3M(32,128,16)_T")]
        structure: String,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        training: TrainArgs,
        #[arg(long, default_value_t = 1e-4)]
        l1: f64,
        #[arg(long, default_value_t = 1e-3)]
        l2: f64,
        #[arg(long, default_value_t = 1e-4)]
        custom_l1: f64,
        #[arg(long, default_value_t = 5.0)]
        prune_percent: f64,
        #[arg(long, default_value_t = 100)]
        prune_period: usize,
        #[command(flatten)]
        lann: LannArgs,
        #[arg(long, default_value_t = 500)]
        resolution: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Train { .. } => "train",
            Command::BuildLann { .. } => "build-lann",
            Command::Complexity { .. } => "complexity",
            Command::TraceTraining { .. } => "trace-training",
            Command::Ablate { .. } => "ablate",
            Command::Regions { .. } => "regions",
            Command::Diagnostics { .. } => "diagnostics",
            Command::Propagation { .. } => "propagation",
            Command::CompareRegularizers { .. } => "compare-regularizers",
            Command::Replay { .. } => "replay",
        }
    }

    fn common(&self) -> Option<&Common> {
        match self {
            Command::Train { common, .. }
            | Command::BuildLann { common, .. }
            | Command::Complexity { common, .. }
            | Command::TraceTraining { common, .. }
            | Command::Ablate { common, .. }
            | Command::Regions { common, .. }
            | Command::Diagnostics { common, .. }
            | Command::Propagation { common, .. }
            | Command::CompareRegularizers { common, .. } => Some(common),
            Command::Replay { .. } => None,
        }
    }

    fn dataset(&self) -> Option<&str> {
        match self {
            Command::Train { data, .. }
            | Command::BuildLann { data, .. }
            | Command::TraceTraining { data, .. }
            | Command::Ablate { data, .. }
            | Command::CompareRegularizers { data, .. } => Some(&data.dataset),
            Command::Regions { dataset, .. } => dataset.as_deref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, without `--out` and `--threads`, with the
    /// seed made explicit.
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub dataset: Option<String>,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// Failure of a command: an error, or a build that stopped above its target.
enum Failure {
    Error(Error),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Structure { .. }
        | Error::Dimension(_)
        | Error::Model(_)
        | Error::Index(_)
        | Error::EmptyDataset
        | Error::ActivationMismatch { .. } => EXIT_CONFIG,
        Error::Io { .. } | Error::Csv { .. } | Error::Parse { .. } | Error::Json(_) => EXIT_IO,
        Error::Diverged { .. } => EXIT_NOT_CONVERGED,
        Error::DuplicateTangent(_) | Error::Exhausted | Error::Diagnostics(_) => EXIT_FAILURE,
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread cap not applied: {e}");
        }
    }
    let recorded = recorded_args(&args[1..], &cli.command);
    match execute(&cli.command, recorded) {
        Ok(()) => EXIT_OK,
        Err(Failure::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NOT_CONVERGED
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Arguments worth replaying: drop output and thread flags, pin the seed.
fn recorded_args(args: &[OsString], command: &Command) -> Vec<String> {
    let mut out = Vec::new();
    let mut has_seed = false;
    let mut iter = args.iter().map(|a| a.to_string_lossy().into_owned());
    while let Some(arg) = iter.next() {
        let flag = arg.split_once('=').map_or(arg.as_str(), |(f, _)| f);
        match flag {
            "--out" | "--threads" => {
                if !arg.contains('=') {
                    iter.next();
                }
            }
            _ => {
                has_seed |= flag == "--seed";
                out.push(arg);
            }
        }
    }
    if let (false, Some(common)) = (has_seed, command.common()) {
        out.push("--seed".into());
        out.push(common.seed.to_string());
    }
    out
}

fn execute(command: &Command, recorded: Vec<String>) -> std::result::Result<(), Failure> {
    if let Command::Replay { manifest, out } = command {
        return replay(manifest, out);
    }
    let common = command.common().expect("non-replay commands carry common flags");
    fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    let started = Instant::now();
    let mut outputs = Vec::new();
    let result = dispatch(command, &common.out, &mut outputs);
    if matches!(result, Ok(()) | Err(Failure::NotConverged(_))) {
        let manifest = RunManifest {
            command: command.name().into(),
            args: recorded,
            config: serde_json::to_value(command).map_err(Error::from)?,
            seed: common.seed,
            dataset: command.dataset().map(str::to_string),
            version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            outputs,
        };
        manifest.save(&common.out)?;
    }
    result
}

fn replay(manifest: &Path, out: &Path) -> std::result::Result<(), Failure> {
    let m = RunManifest::load(manifest)?;
    let mut argv = vec!["lannlab".to_string(), m.command.clone()];
    // args start with the subcommand name
    argv.extend(m.args.iter().skip(1).cloned());
    argv.push("--out".into());
    argv.push(out.display().to_string());
    let cli = Cli::try_parse_from(&argv).map_err(|e| Error::Config(format!("manifest arguments: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(Error::Config("a manifest cannot replay another replay".into()).into());
    }
    execute(&cli.command, m.args)
}

fn load_data(data: &DataArgs, seed: u64) -> Result<DataSplit> {
    let source: DatasetSource = data.dataset.parse()?;
    load_dataset(&source, data.scale, seed)
}

fn train_config(t: &TrainArgs, seed: u64, regularizer: Regularizer) -> TrainConfig {
    TrainConfig {
        learning_rate: t.lr,
        epochs: t.epochs,
        batch_size: t.minibatch,
        seed,
        regularizer,
        ..TrainConfig::default()
    }
}

fn parse_structure(s: &str) -> Result<Structure> {
    s.parse()
}

struct Outputs<'a> {
    dir: &'a Path,
    names: &'a mut Vec<String>,
}

impl Outputs<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.names.push(name.to_string());
        self.dir.join(name)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(&path, e))
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.path(name);
        let csv_err = |e: csv::Error| Error::Csv {
            path: path.clone(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        for row in rows {
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }
}

#[derive(Serialize)]
struct MetricsRow {
    epoch: usize,
    loss: f64,
    train_accuracy: Option<f64>,
    test_accuracy: Option<f64>,
}

#[derive(Serialize)]
struct PruneRow {
    epoch: usize,
    layer: usize,
    neuron: usize,
    score: f64,
}

#[derive(Serialize)]
struct AblationRow {
    layer: usize,
    trial: usize,
    neurons: usize,
    flip_rate: f64,
}

#[derive(Serialize)]
struct RegionsRow {
    regions: usize,
    upper_bound_log: f64,
    upper_bound: f64,
    resolution: usize,
    grid_points: usize,
}

fn dispatch(command: &Command, dir: &Path, names: &mut Vec<String>) -> std::result::Result<(), Failure> {
    let mut out = Outputs { dir, names };
    match command {
        Command::Train {
            structure,
            data,
            training,
            reg,
            penalty,
            prune_percent,
            prune_period,
            common,
        } => {
            let structure = parse_structure(structure)?;
            let split = load_data(data, common.seed)?;
            let regularizer = match reg {
                RegKind::None => Regularizer::None,
                RegKind::L1 => Regularizer::L1 { weight: *penalty },
                RegKind::L2 => Regularizer::L2 { weight: *penalty },
                RegKind::CustomL1 => Regularizer::CustomL1 { weight: *penalty },
                RegKind::Prune => Regularizer::Prune {
                    percent: *prune_percent,
                    period: *prune_period,
                },
            };
            let cfg = TrainConfig {
                metrics_every: 10,
                ..train_config(training, common.seed, regularizer)
            };
            let net = init_network(&structure, &split.train, common.seed)?;
            let (net, report) = train(&net, &split.train, Some(&split.test), &cfg)?;
            net.save(&out.path("model.json"))?;
            let rows: Vec<MetricsRow> = report
                .history
                .iter()
                .map(|r| MetricsRow {
                    epoch: r.epoch,
                    loss: r.loss,
                    train_accuracy: r.train_accuracy,
                    test_accuracy: r.test_accuracy,
                })
                .collect();
            out.csv("metrics.csv", &rows)?;
            if matches!(regularizer, Regularizer::Prune { .. }) {
                let rows: Vec<PruneRow> = report
                    .prune_log
                    .iter()
                    .map(|e| PruneRow {
                        epoch: e.epoch,
                        layer: e.neuron.layer + 1,
                        neuron: e.neuron.neuron,
                        score: e.neuron.score,
                    })
                    .collect();
                out.csv("prune_log.csv", &rows)?;
            }
            if let Some(last) = report.history.last() {
                println!(
                    "{structure} epochs={} loss={:.6} train_acc={:.4} test_acc={:.4}",
                    last.epoch,
                    last.loss,
                    last.train_accuracy.unwrap_or(f64::NAN),
                    last.test_accuracy.unwrap_or(f64::NAN)
                );
            }
            Ok(())
        }
        Command::BuildLann {
            model,
            data,
            lann,
            common,
        } => {
            let net = DenseNetwork::load(model)?;
            let split = load_data(data, common.seed)?;
            let cfg = lann.config(common.seed);
            let (g, trace) = build_lann(&net, &split.train, &cfg)?;
            g.save(&out.path("lann.json"))?;
            trace.write_csv(&out.path("build_trace.csv"))?;
            let report = complexity_measure(&g, cfg.lambda);
            println!("{}", report.summary_line());
            not_converged(&trace)
        }
        Command::Complexity { model, lambda, .. } => {
            let g = LannModel::load(model)?;
            let lambda = match (lambda, g.build_record()) {
                (Some(l), _) => *l,
                (None, Some(b)) => b.config.lambda,
                (None, None) => return Err(Error::Config("LANN has no build record; pass --lambda".into()).into()),
            };
            let report = complexity_measure(&g, lambda);
            out.json("complexity.json", &report)?;
            report.write_csv(&out.path("complexity.csv"))?;
            println!("{}", report.summary_line());
            Ok(())
        }
        Command::TraceTraining {
            structure,
            data,
            training,
            measure_every,
            lann,
            common,
        } => {
            let structure = parse_structure(structure)?;
            let split = load_data(data, common.seed)?;
            let net = init_network(&structure, &split.train, common.seed)?;
            let cfg = train_config(training, common.seed, Regularizer::None);
            let points = trace_training(&net, &split, &cfg, *measure_every, &lann.config(common.seed))?;
            out.csv("training_trace.csv", &points)?;
            if let Some(p) = points.last() {
                println!("epoch={} C={:.4} gap={:.4}", p.epoch, p.complexity, p.gap);
            }
            Ok(())
        }
        Command::Ablate {
            model,
            data,
            layer,
            fraction,
            trials,
            common,
        } => {
            let net = DenseNetwork::load(model)?;
            let split = load_data(data, common.seed)?;
            let layers: Vec<usize> = match layer {
                Some(0) => return Err(Error::Config("layers are numbered from 1".into()).into()),
                Some(l) => vec![l - 1],
                None => (0..net.depth()).collect(),
            };
            let mut rows = Vec::new();
            for l in layers {
                let result = ablation_flip_rate(&net, l, *fraction, *trials, &split.test, common.seed)?;
                println!("layer={} mean_flip_rate={:.6}", l + 1, result.mean);
                rows.extend(result.trials.iter().enumerate().map(|(t, &flip_rate)| AblationRow {
                    layer: l + 1,
                    trial: t,
                    neurons: result.neurons_per_trial,
                    flip_rate,
                }));
            }
            out.csv("ablation.csv", &rows)?;
            Ok(())
        }
        Command::Regions {
            model,
            r#box,
            dataset,
            box_fraction,
            resolution,
            common,
        } => {
            let g = LannModel::load(model)?;
            let bounds = match (r#box, dataset) {
                (Some(b), _) => parse_box(b)?,
                (None, Some(d)) => {
                    let source: DatasetSource = d.parse()?;
                    expanded_box(load_dataset(&source, false, common.seed)?.train.bounds(), *box_fraction)
                }
                (None, None) => return Err(Error::Config("pass --box or --dataset".into()).into()),
            };
            let res = vec![*resolution; bounds.len()];
            let regions = count_regions_grid(&g, &bounds, &res)?;
            let (_, log_bound) = region_upper_bound(&g);
            let row = RegionsRow {
                regions,
                upper_bound_log: log_bound,
                upper_bound: log_bound.exp(),
                resolution: *resolution,
                grid_points: res.iter().product(),
            };
            println!("regions={regions} bound={:.6e}", row.upper_bound);
            out.csv("regions.csv", &[row])?;
            Ok(())
        }
        Command::Diagnostics { trace, window, .. } => {
            let rows = BuildTrace::read_csv(trace)?;
            let diag = lambda_diagnostics(&rows, *window)?;
            diag.write_csv(&out.path("diagnostics.csv"))?;
            match (diag.settle_iteration, diag.lambda0) {
                (Some(it), Some(l0)) => println!("settle_iteration={it} lambda0={l0}"),
                _ => println!("lambda0 unavailable: no settled curvature ratio"),
            }
            Ok(())
        }
        Command::Propagation { model, .. } => {
            let g = LannModel::load(model)?;
            let report = PropagationReport::from_lann(&g)?;
            report.write_csv(&out.path("propagation.csv"))?;
            let fmt = |v: Vec<f64>| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
            println!("amplification: {}", fmt(PropagationReport::layer_means(&report.amplification)));
            println!("accumulation: {}", fmt(PropagationReport::layer_means(&report.accumulation)));
            Ok(())
        }
        Command::CompareRegularizers {
            structure,
            data,
            training,
            l1,
            l2,
            custom_l1,
            prune_percent,
            prune_period,
            lann,
            resolution,
            common,
        } => {
            let structure = parse_structure(structure)?;
            let split = load_data(data, common.seed)?;
            let net = init_network(&structure, &split.train, common.seed)?;
            let penalties = PenaltySet {
                l1: *l1,
                l2: *l2,
                custom_l1: *custom_l1,
                prune_percent: *prune_percent,
                prune_period: *prune_period,
            };
            let grid = RegionGrid {
                resolution: *resolution,
                ..RegionGrid::default()
            };
            let rows = compare_regularizers(
                &net,
                &split,
                &train_config(training, common.seed, Regularizer::None),
                &penalties.variants(),
                &lann.config(common.seed),
                &grid,
            )?;
            for r in &rows {
                println!(
                    "{:<5} C={:.4} regions={} train_acc={:.4} test_acc={:.4}",
                    r.variant, r.complexity, r.regions, r.train_accuracy, r.test_accuracy
                );
            }
            out.csv("comparison.csv", &rows)?;
            Ok(())
        }
        Command::Replay { .. } => unreachable!("handled by execute"),
    }
}

fn not_converged(trace: &BuildTrace) -> std::result::Result<(), Failure> {
    if trace.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!(
            "build stopped ({:?}) at E = {} above lambda = {}",
            trace.stop_reason,
            trace.final_error(),
            trace.config.lambda
        )))
    }
}

/// `lo:hi,lo:hi,…`
pub fn parse_box(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("box component {part:?} is not lo:hi")))?;
            let lo: f64 = lo.trim().parse().map_err(|_| Error::Config(format!("bad box bound {lo:?}")))?;
            let hi: f64 = hi.trim().parse().map_err(|_| Error::Config(format!("bad box bound {hi:?}")))?;
            if !(lo < hi) {
                return Err(Error::Config(format!("box component {part:?} is empty")));
            }
            Ok((lo, hi))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_strings() {
        assert_eq!(parse_box("-1:2,0:0.5").unwrap(), vec![(-1.0, 2.0), (0.0, 0.5)]);
        assert!(parse_box("1:1").is_err());
        assert!(parse_box("1").is_err());
    }

    #[test]
    fn recorded_arguments_drop_output_and_pin_seed() {
        let argv = ["lannlab", "train", "--structure", "L1M2_T", "--out", "x", "--threads=2"];
        let cli = Cli::try_parse_from(argv).unwrap();
        let args: Vec<OsString> = argv[1..].iter().map(OsString::from).collect();
        assert_eq!(
            recorded_args(&args, &cli.command),
            ["train", "--structure", "L1M2_T", "--seed", "0"]
        );
    }

    #[test]
    fn bad_flags_are_config_errors() {
        assert_eq!(run(["lannlab", "train"]), EXIT_CONFIG);
        assert_eq!(run(["lannlab", "bogus"]), EXIT_CONFIG);
    }
}
