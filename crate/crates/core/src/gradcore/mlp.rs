use ndarray::{Array1, Array2};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::activation::Activation;
use super::embedding::Embedding;
use super::network::{LayerGrads, Network};
use super::spectral::{spectral_norm_estimate, SpectralScale};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// One linear layer: raw weight (`out x in`), bias, and the persistent left
/// iterate `u` used by spectral normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub u: Array1<f64>,
}

/// Trainable parameters of the predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
    pub activation: Activation,
    /// Divide each weight by `max(sigma, 1)` before use.
    pub spectral: bool,
}

/// Gradients with the same layout as [`Mlp::layers`] (weight, bias).
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl MlpGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|(w, b)| [w.as_slice().unwrap(), b.as_slice().unwrap()]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|(w, b)| w.iter().chain(b.iter()).all(|v| v.is_finite()))
    }
}

/// Value of an objective built on the logit, its slope in the logit, and any
/// direct dependence on the input embedding.
#[derive(Debug, Clone)]
pub struct ObjectiveTerms {
    pub value: f64,
    pub dlogit: f64,
    pub direct: Option<Array2<f64>>,
}

impl Mlp {
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization for weights
    /// and biases; `u` drawn from a standard normal and normalized.
    pub fn new(input_dim: usize, hidden: &[usize], activation: Activation, spectral: bool, rng: &mut Rng) -> Self {
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("valid bound");
                let weight = Array2::from_shape_fn((fan_out, fan_in), |_| dist.sample(rng));
                let bias = Array1::from_shape_fn(fan_out, |_| dist.sample(rng));
                let mut u: Array1<f64> = Array1::from_shape_fn(fan_out, |_| StandardNormal.sample(rng));
                let n = u.dot(&u).sqrt();
                if n > 0.0 {
                    u /= n;
                } else {
                    u[0] = 1.0;
                }
                DenseLayer { weight, bias, u }
            })
            .collect();
        Mlp { layers, activation, spectral }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.weight.nrows()).collect()
    }

    pub fn scales(&self) -> Vec<SpectralScale> {
        self.layers
            .iter()
            .map(|l| {
                if self.spectral {
                    SpectralScale::from_left(&l.weight, &l.u)
                } else {
                    SpectralScale::identity(l.weight.ncols())
                }
            })
            .collect()
    }

    /// Effective network for the current parameters and spectral state.
    pub fn network(&self) -> Network {
        self.network_with_scales().0
    }

    pub fn network_with_scales(&self) -> (Network, Vec<SpectralScale>) {
        let scales = self.scales();
        let weights = self
            .layers
            .iter()
            .zip(&scales)
            .map(|(l, s)| if s.scale == 1.0 { l.weight.clone() } else { &l.weight / s.scale })
            .collect();
        let biases = self.layers.iter().map(|l| l.bias.clone()).collect();
        (Network { weights, biases, activation: self.activation }, scales)
    }

    /// Advance every layer's power iteration by `iters` steps.
    pub fn power_iterate(&mut self, iters: usize) {
        for layer in &mut self.layers {
            let (_, u) = spectral_norm_estimate(&layer.weight, iters, &layer.u);
            layer.u = u;
        }
    }

    /// Map gradients with respect to effective weights back to raw weights.
    ///
    /// With `W_eff = W / sigma` and `d sigma = u^T dW v`:
    /// `dL/dW = G / sigma - (<G, W_eff> / sigma) u v^T`.
    pub fn chain_grads(&self, eff: LayerGrads, scales: &[SpectralScale]) -> MlpGrads {
        let layers = eff
            .into_iter()
            .zip(&self.layers)
            .zip(scales)
            .map(|(((gw, gb), layer), s)| {
                if !s.is_active() {
                    return (gw, gb);
                }
                let inner: f64 = gw.iter().zip(layer.weight.iter()).map(|(g, w)| g * w).sum::<f64>() / s.scale;
                let coef = inner / s.scale;
                let mut raw = &gw / s.scale;
                for (i, ui) in layer.u.iter().enumerate() {
                    let mut row = raw.row_mut(i);
                    row.scaled_add(-coef * ui, &s.right);
                }
                (raw, gb)
            })
            .collect();
        MlpGrads { layers }
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_slice_mut().unwrap(), l.bias.as_slice_mut().unwrap()])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

/// Row-major flattening with padded rows zeroed.
pub(crate) fn flatten_masked(z: &Embedding, pad_mask: &[bool]) -> Vec<f64> {
    let mut flat = z.as_slice().to_vec();
    let d = z.cols();
    for (i, &pad) in pad_mask.iter().enumerate() {
        if pad {
            flat[i * d..(i + 1) * d].iter_mut().for_each(|v| *v = 0.0);
        }
    }
    flat
}

fn check_input(params_dim: usize, z: &Embedding, pad_mask: &[bool]) -> Result<()> {
    if pad_mask.len() != z.rows() {
        return Err(Error::config(format!("pad mask has {} entries for {} positions", pad_mask.len(), z.rows())));
    }
    if z.len() != params_dim {
        return Err(Error::config(format!(
            "embedding flattens to {} values but the network expects {}",
            z.len(),
            params_dim
        )));
    }
    Ok(())
}

/// Scalar logit of `z`.
pub fn mlp_forward(params: &Mlp, z: &Embedding, pad_mask: &[bool]) -> Result<f64> {
    check_input(params.input_dim(), z, pad_mask)?;
    Ok(params.network().logit(&flatten_masked(z, pad_mask)))
}

/// Exact gradient of `objective(f(z), z)` with respect to every entry of `z`.
pub fn grad_input<F>(params: &Mlp, z: &Embedding, pad_mask: &[bool], objective: F) -> Result<(f64, Embedding)>
where
    F: Fn(f64, &Embedding) -> ObjectiveTerms,
{
    check_input(params.input_dim(), z, pad_mask)?;
    let (logit, g) = params.network().input_gradient(&flatten_masked(z, pad_mask));
    let terms = objective(logit, z);
    let mut grad = Array2::from_shape_vec((z.rows(), z.cols()), g).expect("shape");
    for (i, &pad) in pad_mask.iter().enumerate() {
        if pad {
            grad.row_mut(i).fill(0.0);
        }
    }
    grad *= terms.dlogit;
    if let Some(direct) = terms.direct {
        grad += &direct;
    }
    Ok((terms.value, Embedding::from_array_unchecked(grad)))
}

/// Gradient of a batch loss `loss(logits) -> (value, dvalue/dlogit)` with
/// respect to the raw parameters.
pub fn grad_params<F>(params: &Mlp, batch: &[Embedding], pad_mask: &[bool], loss: F) -> Result<(f64, MlpGrads)>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    if batch.is_empty() {
        return Err(Error::config("empty batch"));
    }
    let dim = params.input_dim();
    let mut x = Array2::zeros((batch.len(), dim));
    for (b, z) in batch.iter().enumerate() {
        check_input(dim, z, pad_mask)?;
        x.row_mut(b).assign(&Array1::from(flatten_masked(z, pad_mask)));
    }
    let (net, scales) = params.network_with_scales();
    let cache = net.forward(x, None);
    let (value, dlogits) = loss(cache.logits.as_slice().unwrap());
    let (eff, _) = net.backward(&cache, &Array1::from(dlogits), &[], false);
    Ok((value, params.chain_grads(eff, &scales)))
}

/// Hutchinson estimate of `||grad_z f(z)||_F^2` with Rademacher probes.
pub fn hutchinson_frob_sq(
    params: &Mlp,
    z: &Embedding,
    pad_mask: &[bool],
    n_probes: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if n_probes == 0 {
        return Err(Error::config("n_probes must be at least 1"));
    }
    check_input(params.input_dim(), z, pad_mask)?;
    let x = flatten_masked(z, pad_mask);
    let net = params.network();
    let xs = Array2::from_shape_vec((1, x.len()), x).expect("row vector");
    let cache = net.forward(xs, None);
    let mut total = 0.0;
    for _ in 0..n_probes {
        let v = Array2::from_shape_fn((1, z.len()), |(_, j)| {
            let row = j / z.cols();
            if pad_mask[row] {
                0.0
            } else if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        });
        let jv = net.tangent(&cache, v).out[0];
        total += jv * jv;
    }
    Ok(total / n_probes as f64)
}
