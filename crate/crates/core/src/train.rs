//! Mini-batch SGD on softmax cross-entropy, with optional weight penalties and the
//! distribution-driven regularizers.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::distribution::{NeuronDistribution, DEFAULT_GRID_SIZE, DEFAULT_SAMPLE_CAP};
use crate::error::{Error, Result};
use crate::lann::fit_distributions_with;
use crate::network::{argmax_rows, DenseNetwork};
use crate::regularize::{custom_l1_coefficients, prune_step, sign, PruneMask, PrunedNeuron};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    None,
    /// `weight · Σ|w|` over hidden weight matrices.
    L1 { weight: f64 },
    /// `weight · Σw²` over hidden weight matrices.
    L2 { weight: f64 },
    /// L1 with per-neuron coefficients refreshed every epoch.
    CustomL1 { weight: f64 },
    /// Every `period` epochs, remove `percent`% of the remaining hidden neurons.
    Prune { percent: f64, period: usize },
}

impl Regularizer {
    pub fn label(&self) -> &'static str {
        match self {
            Regularizer::None => "NM",
            Regularizer::L1 { .. } => "L1",
            Regularizer::L2 { .. } => "L2",
            Regularizer::CustomL1 { .. } => "C-L1",
            Regularizer::Prune { .. } => "PR",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Regularizer::None => Ok(()),
            Regularizer::L1 { weight } | Regularizer::L2 { weight } | Regularizer::CustomL1 { weight } => {
                if weight >= 0.0 && weight.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("penalty weight must be non-negative, got {weight}")))
                }
            }
            Regularizer::Prune { percent, period } => {
                if !(0.0..=50.0).contains(&percent) {
                    Err(Error::Config(format!("prune percent must be in [0, 50], got {percent}")))
                } else if period == 0 {
                    Err(Error::Config("prune period must be positive".into()))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub regularizer: Regularizer,
    /// Record accuracies every this many epochs (and always at the last one).
    pub metrics_every: usize,
    /// Activations per neuron used when refreshing distributions.
    pub sample_cap: usize,
    pub grid_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.02,
            epochs: 2000,
            batch_size: 32,
            seed: 0,
            regularizer: Regularizer::None,
            metrics_every: 1,
            sample_cap: DEFAULT_SAMPLE_CAP,
            grid_size: DEFAULT_GRID_SIZE,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.metrics_every == 0 || self.sample_cap == 0 || self.grid_size == 0 {
            return Err(Error::Config("batch size, metrics interval, sample cap and grid size must be positive".into()));
        }
        self.regularizer.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean mini-batch cross-entropy (penalty excluded).
    pub loss: f64,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneEvent {
    pub epoch: usize,
    #[serde(flatten)]
    pub neuron: PrunedNeuron,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    pub prune_log: Vec<PruneEvent>,
    pub warnings: Vec<String>,
}

/// Gradients shaped like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<(Array2<f64>, Array1<f64>)>,
    pub output: (Array2<f64>, Array1<f64>),
}

/// Mean softmax cross-entropy of `net` on the batch and its gradient.
pub fn loss_and_gradients(net: &DenseNetwork, x: ArrayView2<f64>, labels: &[usize]) -> Result<(f64, Gradients)> {
    if x.nrows() != labels.len() {
        return Err(Error::Dimension("batch rows and labels differ".into()));
    }
    if x.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let pass = net.forward_batch(x)?;
    let n = x.nrows() as f64;
    let mut delta = pass.logits;
    let mut loss = 0.0;
    for (mut row, &y) in delta.axis_iter_mut(Axis(0)).zip(labels) {
        if y >= row.len() {
            return Err(Error::Index(format!("label {y} with {} classes", row.len())));
        }
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        loss += total.ln() - (row[y].ln());
        row /= total;
        row[y] -= 1.0;
    }
    delta /= n;
    loss /= n;

    let act = net.activation();
    let depth = net.depth();
    let last = &pass.hidden[depth - 1];
    let output = (delta.t().dot(last), delta.sum_axis(Axis(0)));
    let mut upstream = delta.dot(&net.output.weights);
    let mut hidden = Vec::with_capacity(depth);
    for i in (0..depth).rev() {
        let h = &pass.hidden[i];
        upstream.zip_mut_with(h, |d, &y| *d *= act.derivative_at_output(y));
        let input = if i == 0 { x } else { pass.hidden[i - 1].view() };
        let gw = upstream.t().dot(&input);
        let gb = upstream.sum_axis(Axis(0));
        if i > 0 {
            upstream = upstream.dot(&net.hidden[i].weights);
        }
        hidden.push((gw, gb));
    }
    hidden.reverse();
    Ok((loss, Gradients { hidden, output }))
}

/// Value of a plain L1 / L2 penalty; zero for the other regularizers.
pub fn weight_penalty(net: &DenseNetwork, reg: &Regularizer) -> f64 {
    let weights = net.hidden_layers().iter().flat_map(|l| l.weights.iter());
    match *reg {
        Regularizer::L1 { weight } => weight * weights.map(|w| w.abs()).sum::<f64>(),
        Regularizer::L2 { weight } => weight * weights.map(|w| w * w).sum::<f64>(),
        _ => 0.0,
    }
}

pub fn accuracy(net: &DenseNetwork, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let predicted = argmax_rows(net.logits_batch(data.features())?.view());
    let hits = predicted.iter().zip(data.labels()).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / data.len() as f64)
}

pub fn train(
    net: &DenseNetwork,
    train_set: &LabeledDataset,
    test_set: Option<&LabeledDataset>,
    cfg: &TrainConfig,
) -> Result<(DenseNetwork, TrainReport)> {
    train_observed(net, train_set, test_set, cfg, |_, _| {})
}

/// Like [`train`], calling `observer` after every epoch with that epoch's record and
/// the current weights.
pub fn train_observed(
    net: &DenseNetwork,
    train_set: &LabeledDataset,
    test_set: Option<&LabeledDataset>,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&EpochRecord, &DenseNetwork),
) -> Result<(DenseNetwork, TrainReport)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train_set.dim() != net.input_dim() {
        return Err(Error::Dimension(format!(
            "dataset has {} features, network expects {}",
            train_set.dim(),
            net.input_dim()
        )));
    }
    if let Some(&bad) = train_set.labels().iter().find(|&&y| y >= net.output_dim()) {
        return Err(Error::Index(format!("label {bad} with {} outputs", net.output_dim())));
    }

    let mut net = net.clone();
    let mut report = TrainReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut mask = PruneMask::empty(&net);
    let lr = cfg.learning_rate;

    for epoch in 1..=cfg.epochs {
        let coeffs = match cfg.regularizer {
            Regularizer::CustomL1 { weight } => {
                let dists = refresh_distributions(&net, train_set, cfg, epoch)?;
                match custom_l1_coefficients(&net, &dists, weight) {
                    Ok(c) => Some(c.scaled),
                    Err(Error::Diagnostics(msg)) => {
                        log::warn!("epoch {epoch}: {msg}; using plain L1");
                        report.warnings.push(format!("epoch {epoch}: {msg}; using plain L1"));
                        Some(net.widths().iter().map(|&m| vec![weight; m]).collect())
                    }
                    Err(e) => return Err(e),
                }
            }
            _ => None,
        };

        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let x = train_set.features().select(Axis(0), chunk);
            let y: Vec<usize> = chunk.iter().map(|&r| train_set.labels()[r]).collect();
            let (loss, mut grads) = loss_and_gradients(&net, x.view(), &y)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            loss_sum += loss;
            batches += 1;
            add_penalty_gradient(&net, &cfg.regularizer, coeffs.as_deref(), &mut grads);
            apply_step(&mut net, &grads, lr);
            if mask.count() > 0 {
                mask.apply(&mut net);
            }
        }

        if let Regularizer::Prune { percent, period } = cfg.regularizer {
            if epoch % period == 0 {
                let dists = refresh_distributions(&net, train_set, cfg, epoch)?;
                let outcome = prune_step(&net, &dists, percent, &mask, false)?;
                if outcome.shortfall > 0 {
                    let msg = format!("epoch {epoch}: {} neurons spared to keep layers non-empty", outcome.shortfall);
                    log::warn!("{msg}");
                    report.warnings.push(msg);
                }
                report
                    .prune_log
                    .extend(outcome.pruned.iter().map(|&neuron| PruneEvent { epoch, neuron }));
                net = outcome.net;
                mask = outcome.mask;
            }
        }

        let measure = epoch % cfg.metrics_every == 0 || epoch == cfg.epochs;
        let record = EpochRecord {
            epoch,
            loss: loss_sum / batches as f64,
            train_accuracy: if measure { Some(accuracy(&net, train_set)?) } else { None },
            test_accuracy: match test_set {
                Some(t) if measure => Some(accuracy(&net, t)?),
                _ => None,
            },
        };
        observer(&record, &net);
        report.history.push(record);
    }
    Ok((net, report))
}

fn refresh_distributions(
    net: &DenseNetwork,
    data: &LabeledDataset,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<Vec<Vec<NeuronDistribution>>> {
    let seed = cfg.seed.wrapping_add(epoch as u64);
    fit_distributions_with(net, data, cfg.grid_size, cfg.sample_cap, seed, NeuronDistribution::fit_binned)
}

fn add_penalty_gradient(net: &DenseNetwork, reg: &Regularizer, coeffs: Option<&[Vec<f64>]>, grads: &mut Gradients) {
    for (i, (layer, (gw, _))) in net.hidden_layers().iter().zip(grads.hidden.iter_mut()).enumerate() {
        match *reg {
            Regularizer::L1 { weight } => gw.zip_mut_with(&layer.weights, |g, &w| *g += weight * sign(w)),
            Regularizer::L2 { weight } => gw.zip_mut_with(&layer.weights, |g, &w| *g += 2.0 * weight * w),
            Regularizer::CustomL1 { .. } => {
                let rows = &coeffs.expect("customized L1 coefficients")[i];
                for ((mut grow, wrow), &a) in gw.outer_iter_mut().zip(layer.weights.outer_iter()).zip(rows) {
                    grow.zip_mut_with(&wrow, |g, &w| *g += a * sign(w));
                }
            }
            Regularizer::None | Regularizer::Prune { .. } => {}
        }
    }
}

fn apply_step(net: &mut DenseNetwork, grads: &Gradients, lr: f64) {
    for (layer, (gw, gb)) in net.hidden.iter_mut().zip(&grads.hidden) {
        layer.weights.scaled_add(-lr, gw);
        layer.bias.scaled_add(-lr, gb);
    }
    net.output.weights.scaled_add(-lr, &grads.output.0);
    net.output.bias.scaled_add(-lr, &grads.output.1);
}
