mod common;

use common::{max_abs_diff, naive_forward, naive_forward_with, random_net, rng};
use lannlab::dataset::make_moons;
use lannlab::{Activation, DenseLayer, DenseNetwork};
use ndarray::{array, Array2};
use rand::Rng;

#[test]
fn forward_matches_straight_line_products() {
    let net = DenseNetwork::random(2, &[16, 16], 3, Activation::Tanh, 11).unwrap();
    let data = make_moons(200, 0.1, 4).unwrap();
    let batch = net.logits_batch(data.features()).unwrap();
    for (r, x) in data.features().outer_iter().enumerate() {
        let want = naive_forward(&net, x.as_slice().unwrap());
        let single = net.forward(x.as_slice().unwrap()).unwrap().logits;
        assert!(max_abs_diff(single.as_slice().unwrap(), &want) < 1e-12);
        assert!(max_abs_diff(batch.row(r).as_slice().unwrap(), &want) < 1e-12);
    }
}

#[test]
fn forward_is_bit_deterministic() {
    let net = DenseNetwork::random(2, &[8, 8], 2, Activation::Sigmoid, 3).unwrap();
    let data = make_moons(100, 0.2, 1).unwrap();
    let a = net.logits_batch(data.features()).unwrap();
    let b = net.clone().logits_batch(data.features()).unwrap();
    assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn json_round_trip_keeps_logits_bit_identical() {
    let mut r = rng(5);
    let net = random_net(&mut r, 2, &[7, 5, 4], 3, Activation::Tanh, 2.0);
    let back = DenseNetwork::from_json(&net.to_json().unwrap()).unwrap();
    assert_eq!(back, net);
    let x = Array2::from_shape_fn((50, 2), |_| r.random_range(-3.0..3.0));
    let a = net.logits_batch(x.view()).unwrap();
    let b = back.logits_batch(x.view()).unwrap();
    assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn ablation_equals_overwriting_hidden_outputs() {
    let mut r = rng(9);
    for trial in 0..10 {
        let net = random_net(&mut r, 3, &[6, 5, 4], 2, Activation::Tanh, 1.5);
        let layer = trial % 3;
        let width = net.widths()[layer];
        let chosen: Vec<usize> = (0..width).filter(|_| r.random_bool(0.4)).collect();
        let ablated = net.ablate(layer, &chosen).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| r.random_range(-2.0..2.0)).collect();
            let want = naive_forward_with(&net, &x, |i, h| {
                if i == layer {
                    for &j in &chosen {
                        h[j] = 0.0;
                    }
                }
            });
            let got = ablated.forward(&x).unwrap().logits;
            assert!(max_abs_diff(got.as_slice().unwrap(), &want) < 1e-12);
        }
    }
}

#[test]
fn ablating_nothing_changes_nothing() {
    let net = DenseNetwork::random(2, &[5, 5], 2, Activation::Tanh, 2).unwrap();
    assert_eq!(net.ablate(1, &[]).unwrap(), net);
}

#[test]
fn ablating_last_layer_leaves_output_bias() {
    let mut r = rng(1);
    let net = random_net(&mut r, 2, &[4, 3], 2, Activation::Tanh, 1.0);
    let ablated = net.ablate(1, &[0, 1, 2]).unwrap();
    for _ in 0..20 {
        let x = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
        assert_eq!(ablated.forward(&x).unwrap().logits, net.output_layer().bias);
    }
}

#[test]
fn ablating_one_path_of_identity_net() {
    // 2-2-1 identity network: h = V x, y = u·h
    let hidden = DenseLayer::new(array![[1.0, 2.0], [3.0, 4.0]], array![0.5, -1.0]).unwrap();
    let output = DenseLayer::new(array![[10.0, 100.0]], array![0.25]).unwrap();
    let net = DenseNetwork::new(2, 1, Activation::Identity, vec![hidden], output).unwrap();
    let x = [1.0, -1.0];
    // h = [1 - 2 + 0.5, 3 - 4 - 1] = [-0.5, -2]
    assert_eq!(net.forward(&x).unwrap().logits[0], 10.0 * -0.5 + 100.0 * -2.0 + 0.25);
    let ablated = net.ablate(0, &[1]).unwrap();
    assert_eq!(ablated.forward(&x).unwrap().logits[0], 10.0 * -0.5 + 0.25);
}
