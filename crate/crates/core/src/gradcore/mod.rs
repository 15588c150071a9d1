//! Minimal differentiable engine for the fixed feed-forward predictor.
//!
//! Only what the counterfactual pipeline needs: a spectrally normalized MLP
//! with exact reverse-mode gradients (with respect to inputs and parameters),
//! forward-mode tangents for Jacobian penalties, Adam, power iteration and a
//! bit-exact checkpoint format.

mod activation;
mod adam;
mod checkpoint;
mod embedding;
mod mlp;
mod network;
mod spectral;

pub use activation::{logistic, softplus, softplus_grad, Activation};
pub use adam::AdamState;
pub use checkpoint::{load_mlp, read_mlp, save_mlp, write_mlp};
pub use embedding::Embedding;
pub use mlp::{grad_input, grad_params, hutchinson_frob_sq, mlp_forward, DenseLayer, Mlp, MlpGrads, ObjectiveTerms};
pub use network::{ForwardCache, Network, TangentCache};
pub use spectral::{spectral_norm_estimate, SpectralScale};
