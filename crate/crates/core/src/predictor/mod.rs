//! The property classifier: smoothing-aware training, inference, and the
//! smoothness diagnostic.

mod config;
mod metrics;
mod model;
mod train;

pub use config::{SmoothingConfig, TrainHyperparams};
pub use metrics::auroc;
pub use model::{
    avg_input_gradient_norm, fgsm_perturb, sidecar_path, EpochRecord, InputLayout, TrainedPredictor, TrainingReport,
};
pub use train::train_predictor;

#[cfg(test)]
mod tests;
