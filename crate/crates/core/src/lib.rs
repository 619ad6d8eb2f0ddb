//! Measuring the complexity of networks with curve activations (tanh, sigmoid)
//! by replacing every hidden activation with a piecewise linear function and
//! counting the linear regions of the result.

pub mod activation;
pub mod cli;
pub mod complexity;
pub mod dataset;
pub mod distribution;
pub mod error;
pub mod experiments;
pub mod lann;
pub mod network;
pub mod propagation;
pub mod pwl;
pub mod regularize;
pub mod structure;
pub mod train;

pub use activation::Activation;
pub use dataset::{LabeledDataset, MinMaxScaler};
pub use distribution::NeuronDistribution;
pub use error::{Error, Result};
pub use lann::{build_lann, BuildConfig, BuildTrace, LannModel};
pub use network::{DenseLayer, DenseNetwork};
pub use pwl::PiecewiseLinearFn;
pub use structure::Structure;
pub use regularize::{CustomL1Coefficients, PruneMask};
pub use train::{train, Regularizer, TrainConfig};
