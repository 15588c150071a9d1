//! Counterfactual optimization over a position-wise latent space.
//!
//! The crate is organized bottom-up:
//!
//! * [`gradcore`]: the small differentiable MLP engine (exact gradients,
//!   tangents, spectral normalization, Adam, checkpoints).
//! * [`latentworld`]: a synthetic codebook latent space with a position-wise
//!   decoder, a ground-truth epistatic scorer and dataset construction.
//! * [`predictor`]: training and serving the smoothed classifier.
//! * [`projector`]: partial forward diffusion plus an analytic posterior-mean
//!   denoiser, blended into a manifold projection.
//! * [`optimizer`]: the masked, projected counterfactual search loop.
//! * [`baselines`]: gradient descent, hill climbing and a genetic algorithm.
//! * [`evaluation`]: campaign metrics, property proxies and report tables.
//! * [`campaign`]: config-driven orchestration used by the command line tool.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod campaign;
pub mod error;
pub mod evaluation;
pub mod gradcore;
pub mod latentworld;
pub mod optimizer;
pub mod predictor;
pub mod projector;
pub mod rng;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
