//! Experiment recipes shared by the command line and the test suites.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::complexity::{complexity_measure, count_regions_grid, expanded_box};
use crate::dataset::{load_csv, load_idx, make_moons, LabeledDataset, MinMaxScaler};
use crate::error::{Error, Result};
use crate::lann::{build_lann, BuildConfig};
use crate::network::DenseNetwork;
use crate::structure::Structure;
use crate::train::{accuracy, train, train_observed, Regularizer, TrainConfig};

pub const DEFAULT_MOONS_SIZE: usize = 2000;
pub const DEFAULT_MOONS_NOISE: f64 = 0.1;
/// Held-out fraction for file-backed datasets.
pub const TEST_FRACTION: f64 = 0.2;
/// Offset between the train and test seeds of generated data.
const TEST_SEED_OFFSET: u64 = 0x9E37_79B9;

/// Where a dataset comes from: `moons[:N[:NOISE]]`, `csv:PATH[:LABEL_COL]` or
/// `idx:IMAGES:LABELS`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Moons { n: usize, noise: f64 },
    Csv { path: PathBuf, label_column: Option<usize> },
    Idx { images: PathBuf, labels: PathBuf },
}

impl FromStr for DatasetSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("dataset {s:?}: {msg}"));
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (s, None),
        };
        match kind {
            "moons" => {
                let parts: Vec<&str> = rest.map(|r| r.split(':').collect()).unwrap_or_default();
                if parts.len() > 2 {
                    return Err(bad("expected moons[:N[:NOISE]]"));
                }
                let n = match parts.first() {
                    Some(p) => p.parse().map_err(|_| bad("sample count is not an integer"))?,
                    None => DEFAULT_MOONS_SIZE,
                };
                let noise = match parts.get(1) {
                    Some(p) => p.parse().map_err(|_| bad("noise is not a number"))?,
                    None => DEFAULT_MOONS_NOISE,
                };
                Ok(DatasetSource::Moons { n, noise })
            }
            "csv" => {
                let rest = rest.filter(|r| !r.is_empty()).ok_or_else(|| bad("missing path"))?;
                // a trailing `:digits` is the label column
                match rest.rsplit_once(':') {
                    Some((path, col)) if !col.is_empty() && col.bytes().all(|b| b.is_ascii_digit()) => {
                        Ok(DatasetSource::Csv {
                            path: path.into(),
                            label_column: Some(col.parse().map_err(|_| bad("label column out of range"))?),
                        })
                    }
                    _ => Ok(DatasetSource::Csv {
                        path: rest.into(),
                        label_column: None,
                    }),
                }
            }
            "idx" => {
                let (images, labels) = rest
                    .and_then(|r| r.split_once(':'))
                    .filter(|(a, b)| !a.is_empty() && !b.is_empty())
                    .ok_or_else(|| bad("expected idx:IMAGES:LABELS"))?;
                Ok(DatasetSource::Idx {
                    images: images.into(),
                    labels: labels.into(),
                })
            }
            _ => Err(bad("unknown kind, expected moons, csv or idx")),
        }
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Moons { n, noise } => write!(f, "moons:{n}:{noise}"),
            DatasetSource::Csv { path, label_column: None } => write!(f, "csv:{}", path.display()),
            DatasetSource::Csv {
                path,
                label_column: Some(c),
            } => write!(f, "csv:{}:{c}", path.display()),
            DatasetSource::Idx { images, labels } => write!(f, "idx:{}:{}", images.display(), labels.display()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DataSplit {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub scaler: Option<MinMaxScaler>,
}

/// Loads a dataset and its held-out part. Generated moons get an independent test
/// sample of the same size; files are split `TEST_FRACTION` at random. With `scale`,
/// both parts are mapped by the training bounds onto `[-1, 1]`.
pub fn load_dataset(source: &DatasetSource, scale: bool, seed: u64) -> Result<DataSplit> {
    let (train, test) = match source {
        DatasetSource::Moons { n, noise } => (
            make_moons(*n, *noise, seed)?,
            make_moons(*n, *noise, seed.wrapping_add(TEST_SEED_OFFSET))?,
        ),
        DatasetSource::Csv { path, label_column } => {
            let data = load_csv(path, *label_column)?;
            data.split(TEST_FRACTION, seed)?
        }
        DatasetSource::Idx { images, labels } => load_idx(images, labels)?.split(TEST_FRACTION, seed)?,
    };
    if !scale {
        return Ok(DataSplit {
            train,
            test,
            scaler: None,
        });
    }
    let scaler = MinMaxScaler::fit(&train);
    Ok(DataSplit {
        train: scaler.transform(&train)?,
        test: scaler.transform(&test)?,
        scaler: Some(scaler),
    })
}

/// Fresh network for `structure` on `data`, with one output per class.
pub fn init_network(structure: &Structure, data: &LabeledDataset, seed: u64) -> Result<DenseNetwork> {
    DenseNetwork::random(
        data.dim(),
        &structure.widths,
        data.num_classes(),
        structure.activation,
        seed,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingTracePoint {
    pub epoch: usize,
    pub complexity: f64,
    pub converged: bool,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// Train accuracy minus test accuracy.
    pub gap: f64,
}

/// Trains from `initial`, measuring the complexity of the current network at epoch 0,
/// every `measure_every` epochs and at the last epoch. The LANN of each snapshot is
/// built on the training data.
pub fn trace_training(
    initial: &DenseNetwork,
    data: &DataSplit,
    train_cfg: &TrainConfig,
    measure_every: usize,
    build_cfg: &BuildConfig,
) -> Result<Vec<TrainingTracePoint>> {
    if measure_every == 0 {
        return Err(Error::Config("measurement interval must be positive".into()));
    }
    build_cfg.validate()?;
    let cfg = TrainConfig {
        metrics_every: train_cfg.epochs.max(1),
        ..train_cfg.clone()
    };
    let mut snapshots = vec![(0, initial.clone())];
    train_observed(initial, &data.train, None, &cfg, |record, net| {
        if record.epoch % measure_every == 0 || record.epoch == cfg.epochs {
            snapshots.push((record.epoch, net.clone()));
        }
    })?;
    snapshots
        .iter()
        .map(|(epoch, net)| {
            let (g, _) = build_lann(net, &data.train, build_cfg)?;
            let report = complexity_measure(&g, build_cfg.lambda);
            let train_accuracy = accuracy(net, &data.train)?;
            let test_accuracy = accuracy(net, &data.test)?;
            Ok(TrainingTracePoint {
                epoch: *epoch,
                complexity: report.complexity,
                converged: report.converged,
                train_accuracy,
                test_accuracy,
                gap: train_accuracy - test_accuracy,
            })
        })
        .collect()
}

/// Penalty settings for the regularizer comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySet {
    pub l1: f64,
    pub l2: f64,
    /// Mean of the customized L1 coefficients.
    pub custom_l1: f64,
    pub prune_percent: f64,
    pub prune_period: usize,
}

impl Default for PenaltySet {
    fn default() -> Self {
        Self {
            l1: 1e-4,
            l2: 1e-3,
            custom_l1: 1e-4,
            prune_percent: 5.0,
            prune_period: 100,
        }
    }
}

impl PenaltySet {
    /// Unregularized first, then L1, L2, customized L1 and pruning.
    pub fn variants(&self) -> Vec<Regularizer> {
        vec![
            Regularizer::None,
            Regularizer::L1 { weight: self.l1 },
            Regularizer::L2 { weight: self.l2 },
            Regularizer::CustomL1 { weight: self.custom_l1 },
            Regularizer::Prune {
                percent: self.prune_percent,
                period: self.prune_period,
            },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub variant: &'static str,
    pub complexity: f64,
    pub converged: bool,
    pub regions: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub pruned: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    /// Total widening of the training bounding box, as a fraction of its width.
    pub box_fraction: f64,
    pub resolution: usize,
}

impl Default for RegionGrid {
    fn default() -> Self {
        Self {
            box_fraction: 0.1,
            resolution: 500,
        }
    }
}

/// Trains one network per regularizer from the same initialization and measures
/// complexity, grid region count and accuracy of each.
pub fn compare_regularizers(
    initial: &DenseNetwork,
    data: &DataSplit,
    train_cfg: &TrainConfig,
    variants: &[Regularizer],
    build_cfg: &BuildConfig,
    grid: &RegionGrid,
) -> Result<Vec<ComparisonRow>> {
    build_cfg.validate()?;
    let bounds = expanded_box(data.train.bounds(), grid.box_fraction);
    let resolution = vec![grid.resolution; bounds.len()];
    variants
        .iter()
        .map(|&regularizer| {
            let cfg = TrainConfig {
                regularizer,
                metrics_every: train_cfg.epochs.max(1),
                ..train_cfg.clone()
            };
            let (net, report) = train(initial, &data.train, None, &cfg)?;
            let (g, _) = build_lann(&net, &data.train, build_cfg)?;
            let measure = complexity_measure(&g, build_cfg.lambda);
            Ok(ComparisonRow {
                variant: regularizer.label(),
                complexity: measure.complexity,
                converged: measure.converged,
                regions: count_regions_grid(&g, &bounds, &resolution)?,
                train_accuracy: accuracy(&net, &data.train)?,
                test_accuracy: accuracy(&net, &data.test)?,
                pruned: report.prune_log.len(),
            })
        })
        .collect()
}
