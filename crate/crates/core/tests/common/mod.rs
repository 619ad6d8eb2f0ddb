#![allow(dead_code)]

use lannlab::{Activation, DenseLayer, DenseNetwork, LannModel, PiecewiseLinearFn};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Network with weights uniform in `[-scale, scale]` and biases in `[-0.5, 0.5]`.
pub fn random_net(
    rng: &mut ChaCha8Rng,
    input: usize,
    widths: &[usize],
    output: usize,
    act: Activation,
    scale: f64,
) -> DenseNetwork {
    let mut layer = |rows: usize, cols: usize| {
        let w = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..=scale));
        let b = Array1::from_shape_fn(rows, |_| rng.random_range(-0.5..=0.5));
        DenseLayer::new(w, b).unwrap()
    };
    let mut prev = input;
    let mut hidden = Vec::new();
    for &w in widths {
        hidden.push(layer(w, prev));
        prev = w;
    }
    let out = layer(output, prev);
    DenseNetwork::new(input, output, act, hidden, out).unwrap()
}

/// Straight-line loops over the stored matrices, with an optional hook that may
/// overwrite hidden outputs after each layer.
pub fn naive_forward_with(
    net: &DenseNetwork,
    x: &[f64],
    mut hook: impl FnMut(usize, &mut Vec<f64>),
) -> Vec<f64> {
    let act = net.activation();
    let affine = |layer: &DenseLayer, input: &[f64]| -> Vec<f64> {
        (0..layer.out_dim())
            .map(|r| {
                let mut s = layer.bias[r];
                for (c, v) in input.iter().enumerate() {
                    s += layer.weights[[r, c]] * v;
                }
                s
            })
            .collect()
    };
    let mut h = x.to_vec();
    for (i, layer) in net.hidden_layers().iter().enumerate() {
        h = affine(layer, &h).into_iter().map(|z| act.eval(z)).collect();
        hook(i, &mut h);
    }
    affine(net.output_layer(), &h)
}

pub fn naive_forward(net: &DenseNetwork, x: &[f64]) -> Vec<f64> {
    naive_forward_with(net, x, |_, _| {})
}

/// Piecewise linear function with `k` distinct tangent points drawn from `[-3, 3]`.
pub fn random_pwl(rng: &mut ChaCha8Rng, act: Activation, k: usize) -> PiecewiseLinearFn {
    loop {
        let pts: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        if let Ok(p) = PiecewiseLinearFn::from_tangent_points(act, pts) {
            return p;
        }
    }
}

/// LANN over `net` whose neurons get between 1 and `max_k` pieces.
pub fn random_lann(rng: &mut ChaCha8Rng, net: DenseNetwork, max_k: usize) -> LannModel {
    let act = net.activation();
    let approx = net
        .widths()
        .iter()
        .map(|&m| {
            (0..m)
                .map(|_| {
                    let k = rng.random_range(1..=max_k);
                    random_pwl(rng, act, k)
                })
                .collect()
        })
        .collect();
    LannModel::new(net, approx, None).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn relative_error(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1e-300)
}
