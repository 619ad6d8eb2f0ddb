//! How per-neuron approximation errors travel to the output: expected Jacobian
//! magnitudes, amplification coefficients, layerwise accumulation, and the random
//! ablation study.

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::distribution::NeuronDistribution;
use crate::error::{Error, Result};
use crate::lann::LannModel;
use crate::network::{argmax_rows, DenseNetwork};

/// `E[|J_i|]`: row `j` is `E[|φ′|]` of neuron `(i, j)` times `|V_i|` row `j`.
pub fn expected_jacobian(net: &DenseNetwork, layer: usize, dists: &[NeuronDistribution]) -> Result<Array2<f64>> {
    let weights = &net
        .hidden_layers()
        .get(layer)
        .ok_or_else(|| Error::Index(format!("hidden layer {layer} of {}", net.depth())))?
        .weights;
    if dists.len() != weights.nrows() {
        return Err(Error::Dimension(format!(
            "{} distributions for a layer of width {}",
            dists.len(),
            weights.nrows()
        )));
    }
    let mut j = weights.mapv(f64::abs);
    for (mut row, d) in j.outer_iter_mut().zip(dists) {
        row *= d.expected_abs_derivative();
    }
    Ok(j)
}

fn all_jacobians(net: &DenseNetwork, dists: &[Vec<NeuronDistribution>]) -> Result<Vec<Array2<f64>>> {
    if dists.len() != net.depth() {
        return Err(Error::Dimension(format!(
            "{} distribution layers for {} hidden layers",
            dists.len(),
            net.depth()
        )));
    }
    dists
        .iter()
        .enumerate()
        .map(|(i, d)| expected_jacobian(net, i, d))
        .collect()
}

/// `w_{i,j} = (1/c) Σ_o (|V_o| E[|J_L|] ⋯ E[|J_{i+1}|])_{o,j}`.
pub fn amplification(net: &DenseNetwork, dists: &[Vec<NeuronDistribution>]) -> Result<Vec<Vec<f64>>> {
    let jacobians = all_jacobians(net, dists)?;
    Ok(amplification_from(net, &jacobians))
}

fn amplification_from(net: &DenseNetwork, jacobians: &[Array2<f64>]) -> Vec<Vec<f64>> {
    let c = net.output_dim() as f64;
    let mut chain = net.output_layer().weights.mapv(f64::abs);
    let mut out = vec![Vec::new(); jacobians.len()];
    for i in (0..jacobians.len()).rev() {
        out[i] = chain.sum_axis(ndarray::Axis(0)).iter().map(|s| s / c).collect();
        if i > 0 {
            chain = chain.dot(&jacobians[i]);
        }
    }
    out
}

fn fitted(g: &LannModel) -> Result<&[Vec<NeuronDistribution>]> {
    g.distributions()
        .ok_or_else(|| Error::Model("LANN has no fitted distributions".into()))
}

/// Layerwise bound `E[|r_1|] = E[e_1]`, `E[|r_i|] = E[e_i] + E[|J_i|] E[|r_{i−1}|]`.
pub fn error_accumulation(g: &LannModel) -> Result<Vec<Array1<f64>>> {
    let jacobians = all_jacobians(g.base(), fitted(g)?)?;
    Ok(accumulate(&jacobians, &expected_errors(g)?))
}

fn expected_errors(g: &LannModel) -> Result<Vec<Array1<f64>>> {
    Ok(g.expected_errors()?.into_iter().map(Array1::from).collect())
}

fn accumulate(jacobians: &[Array2<f64>], errors: &[Array1<f64>]) -> Vec<Array1<f64>> {
    let mut out: Vec<Array1<f64>> = Vec::with_capacity(errors.len());
    for (i, e) in errors.iter().enumerate() {
        let r = match out.last() {
            None => e.clone(),
            Some(prev) => e + &jacobians[i].dot(prev),
        };
        out.push(r);
    }
    out
}

/// The same bound written out as `E[|r_i|] = Σ_{q ≤ i} E[|J_i|] ⋯ E[|J_{q+1}|] E[e_q]`.
pub fn error_accumulation_expanded(g: &LannModel) -> Result<Vec<Array1<f64>>> {
    let jacobians = all_jacobians(g.base(), fitted(g)?)?;
    let errors = expected_errors(g)?;
    Ok((0..errors.len())
        .map(|i| {
            let mut total = Array1::<f64>::zeros(errors[i].len());
            for q in 0..=i {
                let mut term = errors[q].clone();
                for jac in &jacobians[q + 1..=i] {
                    term = jac.dot(&term);
                }
                total += &term;
            }
            total
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub expected_errors: Vec<Vec<f64>>,
    /// Row-major `E[|J_i|]` per hidden layer.
    pub jacobians: Vec<Vec<Vec<f64>>>,
    pub amplification: Vec<Vec<f64>>,
    pub accumulation: Vec<Vec<f64>>,
}

impl PropagationReport {
    pub fn from_lann(g: &LannModel) -> Result<Self> {
        let jacobians = all_jacobians(g.base(), fitted(g)?)?;
        let errors = expected_errors(g)?;
        Ok(Self {
            amplification: amplification_from(g.base(), &jacobians),
            accumulation: accumulate(&jacobians, &errors).into_iter().map(|r| r.to_vec()).collect(),
            expected_errors: errors.into_iter().map(|e| e.to_vec()).collect(),
            jacobians: jacobians
                .iter()
                .map(|j| j.outer_iter().map(|r| r.to_vec()).collect())
                .collect(),
        })
    }

    /// Mean of a per-neuron quantity within each layer.
    pub fn layer_means(values: &[Vec<f64>]) -> Vec<f64> {
        values
            .iter()
            .map(|l| l.iter().sum::<f64>() / l.len() as f64)
            .collect()
    }

    /// One row per neuron: layer, index, E[e], amplification, accumulation.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["layer", "neuron", "expected_error", "amplification", "accumulation"])
            .map_err(|e| csv_err(path, e))?;
        for (i, layer) in self.expected_errors.iter().enumerate() {
            for (j, e) in layer.iter().enumerate() {
                w.write_record([
                    (i + 1).to_string(),
                    j.to_string(),
                    e.to_string(),
                    self.amplification[i][j].to_string(),
                    self.accumulation[i][j].to_string(),
                ])
                .map_err(|e| csv_err(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Fraction of rows whose predicted class differs between the two networks.
pub fn flip_rate(before: &DenseNetwork, after: &DenseNetwork, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let a = argmax_rows(before.logits_batch(data.features())?.view());
    let b = argmax_rows(after.logits_batch(data.features())?.view());
    Ok(a.iter().zip(&b).filter(|(x, y)| x != y).count() as f64 / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub layer: usize,
    pub neurons_per_trial: usize,
    pub trials: Vec<f64>,
    pub mean: f64,
}

/// Repeatedly ablates `⌈fraction · m⌉` random neurons of hidden layer `layer`
/// (0-based) and measures how many predictions flip. Trial `t` draws with seed
/// `seed + t`.
pub fn ablation_flip_rate(
    net: &DenseNetwork,
    layer: usize,
    fraction: f64,
    trials: usize,
    data: &LabeledDataset,
    seed: u64,
) -> Result<AblationResult> {
    let width = net
        .hidden_layers()
        .get(layer)
        .ok_or_else(|| Error::Index(format!("hidden layer {layer} of {}", net.depth())))?
        .out_dim();
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("ablation fraction must be in (0, 1], got {fraction}")));
    }
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let count = (fraction * width as f64).ceil() as usize;
    if count == 0 {
        return Err(Error::Config("ablation fraction selects no neurons".into()));
    }
    let rates = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
            let chosen = sample_indices(&mut rng, width, count).into_vec();
            flip_rate(net, &net.ablate(layer, &chosen)?, data)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AblationResult {
        layer,
        neurons_per_trial: count,
        mean: rates.iter().sum::<f64>() / rates.len() as f64,
        trials: rates,
    })
}
