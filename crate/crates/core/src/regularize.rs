//! Complexity-constraining training aids: customized L1 coefficients and
//! distribution-driven neuron pruning.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::distribution::NeuronDistribution;
use crate::error::{Error, Result};
use crate::network::DenseNetwork;

/// Per-neuron customized L1 coefficients. `scaled[i][j]` multiplies the L1 norm of
/// the weights feeding neuron `(i, j)`, i.e. row `j` of hidden layer `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomL1Coefficients {
    /// `E[|φ′|]` per neuron.
    pub raw: Vec<Vec<f64>>,
    /// Target mean of the scaled coefficients.
    pub target: f64,
    pub scaled: Vec<Vec<f64>>,
}

fn check_shape<T>(net: &DenseNetwork, per_neuron: &[Vec<T>], what: &str) -> Result<()> {
    let widths: Vec<usize> = per_neuron.iter().map(Vec::len).collect();
    if widths != net.widths() {
        return Err(Error::Dimension(format!(
            "{what} shaped {widths:?}, network widths {:?}",
            net.widths()
        )));
    }
    Ok(())
}

/// `a_{i,j} = E[|φ′|]` under each neuron's distribution, rescaled so the mean equals
/// `target`. Fails with `Diagnostics` when every neuron is saturated (mean 0).
pub fn custom_l1_coefficients(
    net: &DenseNetwork,
    dists: &[Vec<NeuronDistribution>],
    target: f64,
) -> Result<CustomL1Coefficients> {
    check_shape(net, dists, "distributions")?;
    if !(target >= 0.0 && target.is_finite()) {
        return Err(Error::Config(format!("penalty weight must be non-negative, got {target}")));
    }
    let raw: Vec<Vec<f64>> = dists
        .iter()
        .map(|layer| layer.iter().map(NeuronDistribution::expected_abs_derivative).collect())
        .collect();
    let scaled = scale_to_mean(&raw, target)?;
    Ok(CustomL1Coefficients { raw, target, scaled })
}

fn scale_to_mean(raw: &[Vec<f64>], target: f64) -> Result<Vec<Vec<f64>>> {
    let count = raw.iter().map(Vec::len).sum::<usize>() as f64;
    let mean = raw.iter().flatten().sum::<f64>() / count;
    if !(mean > 0.0) {
        return Err(Error::Diagnostics(
            "every neuron is saturated; customized L1 coefficients are undefined".into(),
        ));
    }
    let factor = target / mean;
    Ok(raw.iter().map(|layer| layer.iter().map(|a| a * factor).collect()).collect())
}

/// `Σ_{i,j} ā_{i,j} Σ_p |V_i[j, p]|`.
pub fn custom_l1_penalty(net: &DenseNetwork, coeffs: &CustomL1Coefficients) -> Result<f64> {
    check_shape(net, &coeffs.scaled, "coefficients")?;
    Ok(net
        .hidden_layers()
        .iter()
        .zip(&coeffs.scaled)
        .map(|(layer, c)| {
            layer
                .weights
                .outer_iter()
                .zip(c)
                .map(|(row, a)| a * row.iter().map(|w| w.abs()).sum::<f64>())
                .sum::<f64>()
        })
        .sum())
}

/// Subgradient of [`custom_l1_penalty`] per hidden weight matrix, `sign(0) = 0`.
pub fn custom_l1_gradient(net: &DenseNetwork, coeffs: &CustomL1Coefficients) -> Result<Vec<Array2<f64>>> {
    check_shape(net, &coeffs.scaled, "coefficients")?;
    Ok(net
        .hidden_layers()
        .iter()
        .zip(&coeffs.scaled)
        .map(|(layer, c)| {
            let mut g = layer.weights.mapv(sign);
            for (mut row, a) in g.outer_iter_mut().zip(c) {
                row *= *a;
            }
            g
        })
        .collect())
}

pub(crate) fn sign(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Which hidden neurons have been permanently removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneMask {
    pub pruned: Vec<Vec<bool>>,
}

impl PruneMask {
    pub fn empty(net: &DenseNetwork) -> Self {
        Self {
            pruned: net.widths().into_iter().map(|m| vec![false; m]).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.pruned.iter().flatten().filter(|&&p| p).count()
    }

    pub fn remaining(&self) -> usize {
        self.pruned.iter().flatten().filter(|&&p| !p).count()
    }

    pub fn is_pruned(&self, layer: usize, neuron: usize) -> bool {
        self.pruned[layer][neuron]
    }

    /// Zeroes incoming weights, bias and outgoing weights of every pruned neuron.
    pub fn apply(&self, net: &mut DenseNetwork) {
        let depth = net.hidden.len();
        for (i, flags) in self.pruned.iter().enumerate() {
            for (j, _) in flags.iter().enumerate().filter(|(_, &p)| p) {
                net.hidden[i].weights.row_mut(j).fill(0.0);
                net.hidden[i].bias[j] = 0.0;
                let next = if i + 1 < depth {
                    &mut net.hidden[i + 1]
                } else {
                    &mut net.output
                };
                next.weights.column_mut(j).fill(0.0);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrunedNeuron {
    pub layer: usize,
    pub neuron: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub net: DenseNetwork,
    pub mask: PruneMask,
    pub pruned: Vec<PrunedNeuron>,
    /// Neurons that were due but skipped to keep every layer non-empty.
    pub shortfall: usize,
}

/// Ablates the `percent`% of still-active hidden neurons with the largest
/// nonlinearity score (ties by layer, then index). Globally ranked unless
/// `per_layer`, in which case each layer loses `percent`% of its own active neurons.
pub fn prune_step(
    net: &DenseNetwork,
    dists: &[Vec<NeuronDistribution>],
    percent: f64,
    mask: &PruneMask,
    per_layer: bool,
) -> Result<PruneOutcome> {
    check_shape(net, dists, "distributions")?;
    check_shape(net, &mask.pruned, "prune mask")?;
    if !(0.0..=50.0).contains(&percent) {
        return Err(Error::Config(format!("prune percent must be in [0, 50], got {percent}")));
    }
    let mut candidates: Vec<PrunedNeuron> = Vec::new();
    for (i, layer) in dists.iter().enumerate() {
        for (j, d) in layer.iter().enumerate() {
            if !mask.pruned[i][j] {
                candidates.push(PrunedNeuron {
                    layer: i,
                    neuron: j,
                    score: d.nonlinearity_score(),
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.layer.cmp(&b.layer))
            .then(a.neuron.cmp(&b.neuron))
    });

    let mut alive: Vec<usize> = mask
        .pruned
        .iter()
        .map(|l| l.iter().filter(|&&p| !p).count())
        .collect();
    let mut quota: Vec<usize> = if per_layer {
        alive.iter().map(|&a| due(a, percent)).collect()
    } else {
        vec![due(candidates.len(), percent)]
    };
    let mut owed: usize = quota.iter().sum();
    let mut next_mask = mask.clone();
    let mut pruned = Vec::new();
    for c in candidates {
        let slot = if per_layer { c.layer } else { 0 };
        if quota[slot] == 0 {
            continue;
        }
        if alive[c.layer] <= 1 {
            continue;
        }
        alive[c.layer] -= 1;
        quota[slot] -= 1;
        owed -= 1;
        next_mask.pruned[c.layer][c.neuron] = true;
        pruned.push(c);
    }
    let mut out = net.clone();
    next_mask.apply(&mut out);
    Ok(PruneOutcome {
        net: out,
        mask: next_mask,
        pruned,
        shortfall: owed,
    })
}

fn due(active: usize, percent: f64) -> usize {
    (percent / 100.0 * active as f64).round() as usize
}
