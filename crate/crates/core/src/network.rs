//! Fully connected networks with one shared curve activation in every hidden layer
//! and an affine output layer producing logits.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};

/// One affine map `z = W x + b`. Weights are `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(Error::Dimension(format!(
                "weights have {} rows but bias has {} entries",
                weights.nrows(),
                bias.len()
            )));
        }
        Ok(Self { weights, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    fn glorot(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite glorot limit");
        let weights = Array2::from_shape_fn((out_dim, in_dim), |_| dist.sample(rng));
        Self {
            weights,
            bias: Array1::zeros(out_dim),
        }
    }

    /// Row-major batch application: `X · Wᵀ + b`.
    pub(crate) fn apply_batch(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights.t());
        z += &self.bias;
        z
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetwork {
    input_dim: usize,
    output_dim: usize,
    activation: Activation,
    pub(crate) hidden: Vec<DenseLayer>,
    pub(crate) output: DenseLayer,
}

/// Intermediate values of a single forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    /// Post-activation output of every hidden layer.
    pub hidden: Vec<Array1<f64>>,
    pub logits: Array1<f64>,
}

/// Batched forward pass; rows are samples.
#[derive(Debug, Clone)]
pub struct BatchForward {
    pub hidden: Vec<Array2<f64>>,
    pub logits: Array2<f64>,
}

impl DenseNetwork {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        activation: Activation,
        hidden: Vec<DenseLayer>,
        output: DenseLayer,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::Model("input and output dims must be positive".into()));
        }
        if hidden.is_empty() {
            return Err(Error::Model("at least one hidden layer is required".into()));
        }
        let mut prev = input_dim;
        for (i, layer) in hidden.iter().enumerate() {
            if layer.in_dim() != prev {
                return Err(Error::Dimension(format!(
                    "hidden layer {i} expects {} inputs, previous width is {prev}",
                    layer.in_dim()
                )));
            }
            if layer.out_dim() == 0 {
                return Err(Error::Model(format!("hidden layer {i} has zero width")));
            }
            if layer.bias.len() != layer.out_dim() {
                return Err(Error::Dimension(format!("hidden layer {i} bias length")));
            }
            prev = layer.out_dim();
        }
        if output.in_dim() != prev || output.out_dim() != output_dim {
            return Err(Error::Dimension(format!(
                "output layer is {}x{}, expected {output_dim}x{prev}",
                output.out_dim(),
                output.in_dim()
            )));
        }
        if output.bias.len() != output_dim {
            return Err(Error::Dimension("output bias length".into()));
        }
        let net = Self {
            input_dim,
            output_dim,
            activation,
            hidden,
            output,
        };
        if !net.hidden.iter().chain(std::iter::once(&net.output)).all(DenseLayer::is_finite) {
            return Err(Error::Model("non-finite weight".into()));
        }
        Ok(net)
    }

    /// Glorot-uniform weights, zero biases, deterministic per seed.
    pub fn random(
        input_dim: usize,
        widths: &[usize],
        output_dim: usize,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        if widths.is_empty() || widths.contains(&0) {
            return Err(Error::Model(format!("invalid hidden widths {widths:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut prev = input_dim;
        let mut hidden = Vec::with_capacity(widths.len());
        for &w in widths {
            hidden.push(DenseLayer::glorot(prev, w, &mut rng));
            prev = w;
        }
        let output = DenseLayer::glorot(prev, output_dim, &mut rng);
        Self::new(input_dim, output_dim, activation, hidden, output)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn hidden_layers(&self) -> &[DenseLayer] {
        &self.hidden
    }

    pub fn output_layer(&self) -> &DenseLayer {
        &self.output
    }

    pub fn depth(&self) -> usize {
        self.hidden.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.hidden.iter().map(DenseLayer::out_dim).collect()
    }

    pub fn hidden_neuron_count(&self) -> usize {
        self.hidden.iter().map(DenseLayer::out_dim).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardPass> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension(format!(
                "input has length {}, network expects {}",
                x.len(),
                self.input_dim
            )));
        }
        let act = self.activation;
        let mut hidden = Vec::with_capacity(self.hidden.len());
        let mut current = Array1::from(x.to_vec());
        for layer in &self.hidden {
            let z = layer.weights.dot(&current) + &layer.bias;
            current = z.mapv(|v| act.eval(v));
            hidden.push(current.clone());
        }
        let logits = self.output.weights.dot(&current) + &self.output.bias;
        Ok(ForwardPass { hidden, logits })
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<BatchForward> {
        self.check_batch(x)?;
        let act = self.activation;
        let mut hidden: Vec<Array2<f64>> = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let input = hidden.last().map_or(x, |h| h.view());
            let mut z = layer.apply_batch(input);
            z.mapv_inplace(|v| act.eval(v));
            hidden.push(z);
        }
        let last = hidden.last().expect("at least one hidden layer");
        let logits = self.output.apply_batch(last.view());
        Ok(BatchForward { hidden, logits })
    }

    pub fn logits_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_batch(x)?.logits)
    }

    /// Predicted class per row (first maximal logit).
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(self.logits_batch(x)?.view()))
    }

    pub(crate) fn check_batch(&self, x: ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim {
            return Err(Error::Dimension(format!(
                "batch has {} features, network expects {}",
                x.ncols(),
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Copy of the network in which the outputs of `neurons` in hidden layer `layer`
    /// (0-based) are forced to zero, by zeroing their outgoing weight columns.
    pub fn ablate(&self, layer: usize, neurons: &[usize]) -> Result<DenseNetwork> {
        let width = self
            .hidden
            .get(layer)
            .map(DenseLayer::out_dim)
            .ok_or_else(|| Error::Index(format!("hidden layer {layer} of {}", self.depth())))?;
        if let Some(&bad) = neurons.iter().find(|&&j| j >= width) {
            return Err(Error::Index(format!("neuron {bad} in layer {layer} of width {width}")));
        }
        let mut out = self.clone();
        let next = if layer + 1 < out.hidden.len() {
            &mut out.hidden[layer + 1]
        } else {
            &mut out.output
        };
        for &j in neurons {
            next.weights.column_mut(j).fill(0.0);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NetworkFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn argmax_rows(m: ArrayView2<f64>) -> Vec<usize> {
    m.axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct LayerFile {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl From<&DenseLayer> for LayerFile {
    fn from(layer: &DenseLayer) -> Self {
        LayerFile {
            weights: layer.weights.outer_iter().map(|r| r.to_vec()).collect(),
            bias: layer.bias.to_vec(),
        }
    }
}

impl TryFrom<LayerFile> for DenseLayer {
    type Error = Error;

    fn try_from(file: LayerFile) -> Result<Self> {
        let rows = file.weights.len();
        let cols = file.weights.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::Model("empty weight matrix".into()));
        }
        if file.weights.iter().any(|r| r.len() != cols) {
            return Err(Error::Model("ragged weight matrix".into()));
        }
        let flat: Vec<f64> = file.weights.into_iter().flatten().collect();
        let weights = Array2::from_shape_vec((rows, cols), flat)
            .map_err(|e| Error::Model(e.to_string()))?;
        DenseLayer::new(weights, Array1::from(file.bias))
    }
}

/// On-disk JSON layout of a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct NetworkFile {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub layers: Vec<LayerFile>,
    pub output: LayerFile,
}

impl From<&DenseNetwork> for NetworkFile {
    fn from(net: &DenseNetwork) -> Self {
        NetworkFile {
            input_dim: net.input_dim,
            output_dim: net.output_dim,
            activation: net.activation,
            layers: net.hidden.iter().map(LayerFile::from).collect(),
            output: LayerFile::from(&net.output),
        }
    }
}

impl TryFrom<NetworkFile> for DenseNetwork {
    type Error = Error;

    fn try_from(file: NetworkFile) -> Result<Self> {
        let hidden = file
            .layers
            .into_iter()
            .map(DenseLayer::try_from)
            .collect::<Result<Vec<_>>>()?;
        let output = DenseLayer::try_from(file.output)?;
        DenseNetwork::new(file.input_dim, file.output_dim, file.activation, hidden, output)
    }
}
