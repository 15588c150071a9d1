use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::config::{SmoothingConfig, TrainHyperparams};
use crate::error::{Error, Result};
use crate::gradcore::{load_mlp, logistic, save_mlp, Embedding, Mlp, Network};

/// Shape of the inputs a predictor accepts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputLayout {
    pub rows: usize,
    pub cols: usize,
    /// `true` marks a padded position, zeroed before the network sees it.
    pub pad_mask: Vec<bool>,
}

impl InputLayout {
    pub fn unpadded(rows: usize, cols: usize) -> Self {
        InputLayout { rows, cols, pad_mask: vec![false; rows] }
    }

    pub fn flat_dim(&self) -> usize {
        self.rows * self.cols
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingReport {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub val_auroc: f64,
    pub test_auroc: f64,
    /// Mean input-gradient norm of the logit over the test split.
    pub avg_grad_norm: f64,
    pub fgsm_accepted: usize,
    pub fgsm_rejected: usize,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    layout: InputLayout,
    smoothing: SmoothingConfig,
    hyper: TrainHyperparams,
    report: TrainingReport,
}

/// A frozen classifier with cached effective weights.
#[derive(Debug, Clone)]
pub struct TrainedPredictor {
    mlp: Mlp,
    net: Network,
    layout: InputLayout,
    smoothing: SmoothingConfig,
    hyper: TrainHyperparams,
    report: TrainingReport,
}

impl PartialEq for TrainedPredictor {
    fn eq(&self, other: &Self) -> bool {
        self.mlp == other.mlp
            && self.layout == other.layout
            && self.smoothing == other.smoothing
            && self.hyper == other.hyper
            && self.report == other.report
    }
}

impl TrainedPredictor {
    pub fn new(
        mlp: Mlp,
        layout: InputLayout,
        smoothing: SmoothingConfig,
        hyper: TrainHyperparams,
        report: TrainingReport,
    ) -> Result<Self> {
        if mlp.input_dim() != layout.flat_dim() || layout.pad_mask.len() != layout.rows {
            return Err(Error::config("predictor layout does not match its network"));
        }
        let net = mlp.network();
        Ok(TrainedPredictor { mlp, net, layout, smoothing, hyper, report })
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn layout(&self) -> &InputLayout {
        &self.layout
    }

    pub fn smoothing(&self) -> &SmoothingConfig {
        &self.smoothing
    }

    pub fn hyper(&self) -> &TrainHyperparams {
        &self.hyper
    }

    pub fn report(&self) -> &TrainingReport {
        &self.report
    }

    pub(crate) fn report_mut(&mut self) -> &mut TrainingReport {
        &mut self.report
    }

    fn check(&self, z: &Embedding) {
        assert_eq!(
            (z.rows(), z.cols()),
            (self.layout.rows, self.layout.cols),
            "embedding shape does not match the predictor layout"
        );
    }

    fn flatten(&self, z: &Embedding) -> Vec<f64> {
        let mut x = z.as_slice().to_vec();
        let d = self.layout.cols;
        for (i, &pad) in self.layout.pad_mask.iter().enumerate() {
            if pad {
                x[i * d..(i + 1) * d].fill(0.0);
            }
        }
        x
    }

    pub(crate) fn flatten_batch<'a>(&self, zs: impl ExactSizeIterator<Item = &'a Embedding>) -> Array2<f64> {
        let mut x = Array2::zeros((zs.len(), self.layout.flat_dim()));
        for (b, z) in zs.enumerate() {
            self.check(z);
            x.row_mut(b).assign(&Array1::from(self.flatten(z)));
        }
        x
    }

    pub fn predict_logit(&self, z: &Embedding) -> f64 {
        self.check(z);
        self.net.logit(&self.flatten(z))
    }

    /// Probability of the signed target class: `logistic(target * logit)`.
    pub fn predict_proba(&self, z: &Embedding, target: i8) -> f64 {
        debug_assert!(target == 1 || target == -1);
        logistic(f64::from(target) * self.predict_logit(z))
    }

    pub fn predict_logits(&self, zs: &[&Embedding]) -> Vec<f64> {
        if zs.is_empty() {
            return Vec::new();
        }
        self.net.logits(&self.flatten_batch(zs.iter().copied())).to_vec()
    }

    /// Logit and its exact gradient with respect to `z` (zero on padding).
    pub fn logit_gradient(&self, z: &Embedding) -> (f64, Embedding) {
        self.check(z);
        let (f, g) = self.net.input_gradient(&self.flatten(z));
        let mut g = Array2::from_shape_vec((z.rows(), z.cols()), g).expect("shape");
        for (i, &pad) in self.layout.pad_mask.iter().enumerate() {
            if pad {
                g.row_mut(i).fill(0.0);
            }
        }
        (f, Embedding::from_array_unchecked(g))
    }

    /// Writes the parameter file at `path` and a JSON sidecar next to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        save_mlp(&self.mlp, path)?;
        let sidecar = Sidecar {
            layout: self.layout.clone(),
            smoothing: self.smoothing.clone(),
            hyper: self.hyper.clone(),
            report: self.report.clone(),
        };
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mlp = load_mlp(path)?;
        let side: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
        TrainedPredictor::new(mlp, side.layout, side.smoothing, side.hyper, side.report)
            .map_err(|e| Error::Checkpoint { path: path.to_path_buf(), reason: e.to_string() })
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Mean Euclidean norm of the logit's input gradient over `embeddings`.
pub fn avg_input_gradient_norm(p: &TrainedPredictor, embeddings: &[&Embedding]) -> Result<f64> {
    if embeddings.is_empty() {
        return Err(Error::data("gradient norm needs at least one embedding"));
    }
    let mut total = 0.0;
    for chunk in embeddings.chunks(64) {
        let (_, g) = p.net.input_gradients(p.flatten_batch(chunk.iter().copied()));
        let d = p.layout.cols;
        for mut row in g.outer_iter().map(|r| r.to_vec()) {
            for (i, &pad) in p.layout.pad_mask.iter().enumerate() {
                if pad {
                    row[i * d..(i + 1) * d].fill(0.0);
                }
            }
            total += row.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
    }
    Ok(total / embeddings.len() as f64)
}

/// One signed-gradient step that lowers the cross-entropy toward
/// `toward_label`: `z - epsilon * sign(grad_z BCE(f(z), toward_label))`.
pub fn fgsm_perturb(p: &TrainedPredictor, z: &Embedding, epsilon: f64, toward_label: u8) -> Embedding {
    let (f, g) = p.logit_gradient(z);
    let dlogit = logistic(f) - f64::from(toward_label);
    fgsm_from_gradient(z, g.as_slice(), dlogit, epsilon)
}

/// FGSM step given the logit gradient and `dBCE/dlogit`.
pub(crate) fn fgsm_from_gradient(z: &Embedding, logit_grad: &[f64], dlogit: f64, epsilon: f64) -> Embedding {
    let mut out = z.clone();
    if epsilon == 0.0 {
        return out;
    }
    for (v, &g) in out.as_mut_slice().iter_mut().zip(logit_grad) {
        let d = g * dlogit;
        if d > 0.0 {
            *v -= epsilon;
        } else if d < 0.0 {
            *v += epsilon;
        }
    }
    out
}
