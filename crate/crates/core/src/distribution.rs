//! Posterior distribution of a neuron's activation output, estimated with a Gaussian
//! KDE and discretized on a uniform midpoint grid over the activation's output range.
//!
//! The discrete weights are `density(Δx_q) · spacing`, renormalized to sum to one, so
//! every expectation below is a proper weighted average over the grid.

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::pwl::PiecewiseLinearFn;

pub const DEFAULT_GRID_SIZE: usize = 200;
/// Upper bound on the number of activations used per neuron.
pub const DEFAULT_SAMPLE_CAP: usize = 10_000;

/// Fine bins per grid cell used by [`NeuronDistribution::fit_binned`].
const BIN_REFINEMENT: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronDistribution {
    activation: Activation,
    range: (f64, f64),
    grid: Vec<f64>,
    preimage: Vec<f64>,
    weights: Vec<f64>,
    bandwidth: f64,
    sample_count: usize,
}

/// Silverman's rule of thumb, `0.9 · min(σ̂, IQR / 1.34) · n^(-1/5)`, floored at
/// `floor`. `σ̂` uses the `n - 1` denominator and quartiles interpolate linearly.
pub fn silverman_bandwidth(samples: &[f64], floor: f64) -> f64 {
    let n = samples.len();
    if n < 2 {
        return floor;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = var.sqrt().min(iqr / 1.34);
    (0.9 * spread * (n as f64).powf(-0.2)).max(floor)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Uniform subsample (without replacement) of at most `cap` values, order preserved.
pub fn subsample_values(values: &[f64], cap: usize, seed: u64) -> Vec<f64> {
    if values.len() <= cap {
        return values.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample_indices(&mut rng, values.len(), cap).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| values[i]).collect()
}

impl NeuronDistribution {
    /// Exact Gaussian KDE evaluated at every grid point.
    pub fn fit(activation: Activation, samples: &[f64], n_t: usize) -> Result<Self> {
        let (range, h) = Self::prepare(activation, samples, n_t)?;
        let grid = midpoint_grid(range, n_t);
        let spacing = (range.1 - range.0) / n_t as f64;
        let raw = if h >= 0.25 * spacing {
            kde_recurrence(&grid, samples, h)
        } else {
            kde_log_domain(&grid, samples, h)
        };
        Self::assemble(activation, range, grid, raw, h, samples.len())
    }

    /// Binned approximation of [`fit`](Self::fit): samples are linearly binned onto a
    /// grid four times finer than the output grid and the kernel is applied per bin.
    /// Much cheaper for large sample sets; falls back to the exact estimate when the
    /// bandwidth is not wide compared with the bins.
    pub fn fit_binned(activation: Activation, samples: &[f64], n_t: usize) -> Result<Self> {
        let (range, h) = Self::prepare(activation, samples, n_t)?;
        let spacing = (range.1 - range.0) / n_t as f64;
        if h < spacing {
            return Self::fit(activation, samples, n_t);
        }
        let grid = midpoint_grid(range, n_t);
        let fine = spacing / BIN_REFINEMENT as f64;
        let n_bins = n_t * BIN_REFINEMENT + 1;
        // bin b sits at lo + b * fine; grid point q at bin (q * R + R / 2)
        let mut counts = vec![0.0; n_bins];
        for &s in samples {
            let pos = ((s - range.0) / fine).clamp(0.0, (n_bins - 1) as f64);
            let b = (pos.floor() as usize).min(n_bins - 2);
            let frac = pos - b as f64;
            counts[b] += 1.0 - frac;
            counts[b + 1] += frac;
        }
        let kernel: Vec<f64> = (0..n_bins)
            .map(|off| {
                let u = off as f64 * fine / h;
                (-0.5 * u * u).exp()
            })
            .collect();
        let half = BIN_REFINEMENT / 2;
        let raw = (0..n_t)
            .map(|q| {
                let centre = q * BIN_REFINEMENT + half;
                counts
                    .iter()
                    .enumerate()
                    .map(|(b, &c)| c * kernel[b.abs_diff(centre)])
                    .sum()
            })
            .collect();
        Self::assemble(activation, range, grid, raw, h, samples.len())
    }

    fn prepare(activation: Activation, samples: &[f64], n_t: usize) -> Result<((f64, f64), f64)> {
        if samples.is_empty() {
            return Err(Error::Config("cannot fit a distribution to zero samples".into()));
        }
        if n_t == 0 {
            return Err(Error::Config("grid size must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("non-finite activation sample".into()));
        }
        let range = match activation.output_range() {
            Some((lo, hi)) => {
                if let Some(bad) = samples.iter().find(|&&s| s < lo || s > hi) {
                    return Err(Error::Config(format!(
                        "sample {bad} outside the {activation} output range [{lo}, {hi}]"
                    )));
                }
                (lo, hi)
            }
            None => {
                let (lo, hi) = samples
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
                (lo - 1.0, hi + 1.0)
            }
        };
        let h = silverman_bandwidth(samples, 1e-6 * (range.1 - range.0));
        Ok((range, h))
    }

    fn assemble(
        activation: Activation,
        range: (f64, f64),
        grid: Vec<f64>,
        raw: Vec<f64>,
        bandwidth: f64,
        sample_count: usize,
    ) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Config("degenerate kernel density".into()));
        }
        let weights = raw.into_iter().map(|v| v / total).collect();
        let preimage = grid.iter().map(|&y| activation.inverse(y)).collect();
        Ok(Self {
            activation,
            range,
            grid,
            preimage,
            weights,
            bandwidth,
            sample_count,
        })
    }

    /// Builds a distribution from explicit grid weights (normalized here).
    pub fn from_weights(activation: Activation, range: (f64, f64), weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("weights must be finite and non-negative".into()));
        }
        if !(range.0 < range.1) {
            return Err(Error::Config("empty range".into()));
        }
        if let Some((lo, hi)) = activation.output_range() {
            if (lo, hi) != range {
                return Err(Error::Config("range differs from activation output range".into()));
            }
        }
        let grid = midpoint_grid(range, weights.len());
        Self::assemble(activation, range, grid, weights, f64::NAN, 0)
    }

    /// Uniform weights over the grid.
    pub fn uniform(activation: Activation, range: (f64, f64), n_t: usize) -> Result<Self> {
        Self::from_weights(activation, range, vec![1.0; n_t])
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    /// Output-domain grid points `Δx_q`.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Pre-activation images `φ⁻¹(Δx_q)` of the grid points.
    pub fn preimage(&self) -> &[f64] {
        &self.preimage
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }

    /// `E[e] = Σ_q |ℓ(φ⁻¹(Δx_q)) − Δx_q| · t̂_q`.
    pub fn expected_error(&self, pwl: &PiecewiseLinearFn) -> Result<f64> {
        if pwl.activation() != self.activation {
            return Err(Error::ActivationMismatch {
                expected: self.activation.to_string(),
                found: pwl.activation().to_string(),
            });
        }
        Ok(self.expected_error_unchecked(pwl))
    }

    pub(crate) fn expected_error_unchecked(&self, pwl: &PiecewiseLinearFn) -> f64 {
        self.preimage
            .iter()
            .zip(&self.grid)
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|((&z, &y), &w)| (pwl.evaluate(z) - y).abs() * w)
            .sum()
    }

    /// `E[|φ′|] = Σ_q |φ′(φ⁻¹(Δx_q))| · t̂_q`.
    pub fn expected_abs_derivative(&self) -> f64 {
        let act = self.activation;
        self.grid
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| act.derivative_at_output(y).abs() * w)
            .sum()
    }

    /// Expected distance of the output from the centre of the linear regime, `φ(0)`.
    pub fn nonlinearity_score(&self) -> f64 {
        let centre = self.activation.eval(0.0);
        self.grid
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| (y - centre).abs() * w)
            .sum()
    }
}

/// Cell midpoints `lo + (q + ½)·step`, written as offsets from the centre so the grid
/// is exactly symmetric about it.
fn midpoint_grid((lo, hi): (f64, f64), n_t: usize) -> Vec<f64> {
    let step = (hi - lo) / n_t as f64;
    let centre = 0.5 * (lo + hi);
    let mid = 0.5 * (n_t as f64 - 1.0);
    (0..n_t).map(|q| centre + (q as f64 - mid) * step).collect()
}

/// Σ_s exp(-(g_q - s)² / 2h²) for every grid point, walking outward from the grid
/// point nearest each sample with a multiplicative recurrence on the uniform grid.
fn kde_recurrence(grid: &[f64], samples: &[f64], h: f64) -> Vec<f64> {
    let n = grid.len();
    let mut acc = vec![0.0; n];
    if n == 1 {
        acc[0] = samples.iter().map(|s| (-0.5 * ((grid[0] - s) / h).powi(2)).exp()).sum();
        return acc;
    }
    let step = grid[1] - grid[0];
    let delta = step / h;
    let decay = (-delta * delta).exp();
    let half_sq = 0.5 * delta * delta;
    for &s in samples {
        let q0 = (((s - grid[0]) / step).round().max(0.0) as usize).min(n - 1);
        let u0 = (grid[q0] - s) / h;
        let t0 = (-0.5 * u0 * u0).exp();
        acc[q0] += t0;
        // upward: t_{q+1} = t_q · exp(-u_q δ - δ²/2)
        let mut term = t0;
        let mut ratio = (-u0 * delta - half_sq).exp();
        for slot in acc.iter_mut().skip(q0 + 1) {
            term *= ratio;
            ratio *= decay;
            *slot += term;
        }
        // downward: t_{q-1} = t_q · exp(u_q δ - δ²/2)
        let mut term = t0;
        let mut ratio = (u0 * delta - half_sq).exp();
        for slot in acc[..q0].iter_mut().rev() {
            term *= ratio;
            ratio *= decay;
            *slot += term;
        }
    }
    acc
}

/// Same sums as [`kde_recurrence`] computed through log-sum-exp and rescaled by the
/// largest value; used when the bandwidth is tiny relative to the grid spacing.
fn kde_log_domain(grid: &[f64], samples: &[f64], h: f64) -> Vec<f64> {
    let logs: Vec<f64> = grid
        .iter()
        .map(|&g| {
            let exps: Vec<f64> = samples.iter().map(|&s| -0.5 * ((g - s) / h).powi(2)).collect();
            let m = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            m + exps.iter().map(|e| (e - m).exp()).sum::<f64>().ln()
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logs.into_iter().map(|l| (l - top).exp()).collect()
}

/// Serialized form; the grid and preimages are recomputed on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionFile {
    pub activation: Activation,
    pub range: (f64, f64),
    pub bandwidth: Option<f64>,
    pub sample_count: usize,
    pub weights: Vec<f64>,
}

impl From<&NeuronDistribution> for DistributionFile {
    fn from(d: &NeuronDistribution) -> Self {
        Self {
            activation: d.activation,
            range: d.range,
            bandwidth: d.bandwidth.is_finite().then_some(d.bandwidth),
            sample_count: d.sample_count,
            weights: d.weights.clone(),
        }
    }
}

impl TryFrom<DistributionFile> for NeuronDistribution {
    type Error = Error;

    fn try_from(file: DistributionFile) -> Result<Self> {
        let sum: f64 = file.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Model(format!("distribution weights sum to {sum}")));
        }
        let mut d = NeuronDistribution::from_weights(file.activation, file.range, file.weights.clone())?;
        // keep the stored weights bit-for-bit rather than the renormalized copy
        d.weights = file.weights;
        d.bandwidth = file.bandwidth.unwrap_or(f64::NAN);
        d.sample_count = file.sample_count;
        Ok(d)
    }
}

impl Serialize for NeuronDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for NeuronDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        NeuronDistribution::try_from(DistributionFile::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
