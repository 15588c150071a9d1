use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four smoothing mechanisms, individually switchable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingConfig {
    pub spectral_norm: bool,
    pub jacobian_lambda: f64,
    pub jacobian_probes: usize,
    pub fgsm_epsilon: f64,
    pub fgsm_augment: bool,
    /// Softplus hidden activations; off means ReLU.
    pub softplus: bool,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig::all_on()
    }
}

impl SmoothingConfig {
    pub fn all_on() -> Self {
        SmoothingConfig {
            spectral_norm: true,
            jacobian_lambda: 1e-3,
            jacobian_probes: 5,
            fgsm_epsilon: 0.01,
            fgsm_augment: true,
            softplus: true,
        }
    }

    /// Plain training: ReLU, no constraint, no penalty, no augmentation.
    pub fn none() -> Self {
        SmoothingConfig {
            spectral_norm: false,
            jacobian_lambda: 0.0,
            fgsm_augment: false,
            softplus: false,
            ..SmoothingConfig::all_on()
        }
    }

    pub fn jacobian_on(&self) -> bool {
        self.jacobian_lambda > 0.0
    }

    /// Short tag such as `sn+jac+fgsm+sp` or `none`.
    pub fn tag(&self) -> String {
        let parts: Vec<&str> = [
            (self.spectral_norm, "sn"),
            (self.jacobian_on(), "jac"),
            (self.fgsm_augment, "fgsm"),
            (self.softplus, "sp"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, name)| *name)
        .collect();
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jacobian_lambda >= 0.0) || !(self.fgsm_epsilon >= 0.0) {
            return Err(Error::config("jacobian_lambda and fgsm_epsilon must be non-negative"));
        }
        if self.jacobian_probes == 0 {
            return Err(Error::config("jacobian_probes must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainHyperparams {
    pub learning_rate: f64,
    pub dropout: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub softplus_beta: f64,
    /// Power iterations run once training stops.
    pub refine_iters: usize,
}

impl Default for TrainHyperparams {
    fn default() -> Self {
        TrainHyperparams {
            learning_rate: 1e-3,
            dropout: 0.3,
            patience: 5,
            max_epochs: 40,
            batch_size: 32,
            hidden: vec![512, 256],
            softplus_beta: 1.0,
            refine_iters: 50,
        }
    }
}

impl TrainHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("dropout must lie in [0, 1)"));
        }
        if self.patience == 0 || self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::config("patience, max_epochs and batch_size must be at least 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config("hidden sizes must be positive"));
        }
        if !(self.softplus_beta > 0.0) {
            return Err(Error::config("softplus_beta must be positive"));
        }
        Ok(())
    }
}
