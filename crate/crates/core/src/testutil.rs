//! Fixtures shared by unit tests.

use ndarray::{Array1, Array2};

use crate::gradcore::{Activation, DenseLayer, Mlp};
use crate::latentworld::Codebook;
use crate::predictor::{InputLayout, SmoothingConfig, TrainHyperparams, TrainedPredictor, TrainingReport};
use crate::rng::seeded;

/// `f(z) = w . vec(z) + b`, as a network with no hidden layer.
pub fn linear_predictor(rows: usize, cols: usize, w: Vec<f64>, b: f64) -> TrainedPredictor {
    assert_eq!(w.len(), rows * cols);
    let layer = DenseLayer {
        weight: Array2::from_shape_vec((1, rows * cols), w).unwrap(),
        bias: Array1::from_elem(1, b),
        u: Array1::from_elem(1, 1.0),
    };
    let mlp = Mlp { layers: vec![layer], activation: Activation::Relu, spectral: false };
    TrainedPredictor::new(
        mlp,
        InputLayout::unpadded(rows, cols),
        SmoothingConfig::none(),
        TrainHyperparams::default(),
        TrainingReport::default(),
    )
    .unwrap()
}

/// A small random softplus network.
pub fn random_predictor(rows: usize, cols: usize, hidden: &[usize], seed: u64) -> TrainedPredictor {
    let mlp = Mlp::new(rows * cols, hidden, Activation::Softplus { beta: 1.0 }, false, &mut seeded(seed));
    TrainedPredictor::new(
        mlp,
        InputLayout::unpadded(rows, cols),
        SmoothingConfig::none(),
        TrainHyperparams::default(),
        TrainingReport::default(),
    )
    .unwrap()
}

/// `scale` times the identity: codeword `r` is `scale * e_r`.
pub fn one_hot_codebook(alphabet: usize, scale: f64) -> Codebook {
    let cw = Array2::from_shape_fn((alphabet, alphabet), |(i, j)| if i == j { scale } else { 0.0 });
    Codebook::new(cw, scale * 1.414).unwrap()
}

/// Weights of a linear predictor that reads only entry `(row, col)`.
pub fn single_entry_weights(rows: usize, cols: usize, row: usize, col: usize, weight: f64) -> Vec<f64> {
    let mut w = vec![0.0; rows * cols];
    w[row * cols + col] = weight;
    w
}
