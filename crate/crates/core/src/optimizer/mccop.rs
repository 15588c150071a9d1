use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::result::{differing, CounterfactualResult, PhaseTimes};
use crate::error::{Error, Result};
use crate::gradcore::{logistic, softplus, Embedding};
use crate::latentworld::decode;
use crate::predictor::TrainedPredictor;
use crate::projector::{Projector, ProjectorConfig};
use crate::rng::{self, domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MccopConfig {
    pub k: usize,
    pub lambda_dist: f64,
    pub margin: f64,
    /// Projection strength.
    pub alpha: f64,
    /// Diffusion step the projection noises to.
    pub t_diff: usize,
    pub eta: f64,
    pub t_max: usize,
    pub tau: f64,
    /// Signed target label, -1 or +1.
    pub target: i8,
    /// User-supplied editable positions; replaces sensitivity masking.
    pub fixed_mask: Option<Vec<bool>>,
}

impl Default for MccopConfig {
    fn default() -> Self {
        MccopConfig {
            k: 5,
            lambda_dist: 0.1,
            margin: 2.2,
            alpha: 0.3,
            t_diff: 100,
            eta: 0.5,
            t_max: 50,
            tau: 0.95,
            target: 1,
            fixed_mask: None,
        }
    }
}

impl MccopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if !(self.tau > 0.5 && self.tau <= 1.0) {
            return Err(Error::config("tau must lie in (0.5, 1]"));
        }
        if !(self.eta > 0.0) || !(self.margin > 0.0) || !(self.lambda_dist >= 0.0) {
            return Err(Error::config("eta and margin must be positive, lambda_dist non-negative"));
        }
        if self.t_max == 0 {
            return Err(Error::config("t_max must be at least 1"));
        }
        if self.target != 1 && self.target != -1 {
            return Err(Error::config("target must be -1 or +1"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("alpha must lie in [0, 1]"));
        }
        Ok(())
    }

    /// `base` with this config's projection strength and noise level.
    pub fn projector_config(&self, base: &ProjectorConfig) -> ProjectorConfig {
        ProjectorConfig { alpha: self.alpha, t_diff: self.t_diff, ..base.clone() }
    }
}

/// `log(1 + exp(m - target * logit))`.
pub fn margin_loss(logit: f64, target: i8, margin: f64) -> f64 {
    softplus(margin - f64::from(target) * logit, 1.0)
}

/// Margin loss plus `lambda_dist * ||z - z_orig||^2`.
pub fn cf_loss(z: &Embedding, z_orig: &Embedding, predictor: &TrainedPredictor, cfg: &MccopConfig) -> f64 {
    margin_loss(predictor.predict_logit(z), cfg.target, cfg.margin) + cfg.lambda_dist * z.sq_distance(z_orig)
}

/// Loss value and its gradient with respect to `z`.
pub fn cf_loss_gradient(
    z: &Embedding,
    z_orig: &Embedding,
    predictor: &TrainedPredictor,
    cfg: &MccopConfig,
) -> (f64, Embedding) {
    let (f, mut g) = predictor.logit_gradient(z);
    let y = f64::from(cfg.target);
    let dlogit = -y * logistic(cfg.margin - y * f);
    let value = margin_loss(f, cfg.target, cfg.margin) + cfg.lambda_dist * z.sq_distance(z_orig);
    for ((gv, &zv), &ov) in g.as_mut_slice().iter_mut().zip(z.as_slice()).zip(z_orig.as_slice()) {
        *gv = dlogit * *gv + 2.0 * cfg.lambda_dist * (zv - ov);
    }
    (value, g)
}

fn row_norms(grad: &Embedding, pad_mask: &[bool]) -> Vec<f64> {
    (0..grad.rows())
        .map(|i| {
            if pad_mask.get(i).copied().unwrap_or(false) {
                f64::NEG_INFINITY
            } else {
                grad.row(i).iter().map(|v| v * v).sum::<f64>().sqrt()
            }
        })
        .collect()
}

/// `s_i = ||grad_{z_i} L||`; padded rows get negative infinity.
pub fn position_sensitivity(
    z: &Embedding,
    z_orig: &Embedding,
    predictor: &TrainedPredictor,
    cfg: &MccopConfig,
) -> Vec<f64> {
    let (_, g) = cf_loss_gradient(z, z_orig, predictor, cfg);
    row_norms(&g, &predictor.layout().pad_mask)
}

/// The `k` largest entries, ties resolved toward the lower index. Entries
/// equal to negative infinity (padding) are never selected.
pub fn topk_mask(s: &[f64], k: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..s.len()).filter(|&i| s[i] != f64::NEG_INFINITY).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let mut mask = vec![false; s.len()];
    for &i in order.iter().take(k) {
        mask[i] = true;
    }
    mask
}

/// Everything one step produced, exposed to observers.
#[derive(Debug, Clone)]
pub struct StepTrace {
    pub step: usize,
    pub loss: f64,
    pub mask: Vec<bool>,
    /// Iterate after the masked step and hard reset, before projection.
    pub pre_projection: Embedding,
    pub next: Embedding,
}

/// One iteration: gradient, mask, masked step, hard reset, projection.
#[allow(clippy::too_many_arguments)]
pub fn mccop_step(
    z_t: &Embedding,
    z_orig: &Embedding,
    predictor: &TrainedPredictor,
    projector: &Projector,
    cfg: &MccopConfig,
    step: usize,
    noise_seed: u64,
    phases: &mut PhaseTimes,
) -> Result<StepTrace> {
    let t0 = Instant::now();
    let (loss, grad) = cf_loss_gradient(z_t, z_orig, predictor, cfg);
    phases.gradient += t0.elapsed();
    if !loss.is_finite() || !grad.is_finite() {
        return Err(Error::Optimization(format!("non-finite loss or gradient at step {step}")));
    }
    let t1 = Instant::now();
    let mask = match &cfg.fixed_mask {
        Some(m) => {
            if m.len() != z_t.rows() {
                return Err(Error::config(format!("fixed mask has {} entries for {} rows", m.len(), z_t.rows())));
            }
            m.clone()
        }
        None => topk_mask(&row_norms(&grad, &predictor.layout().pad_mask), cfg.k),
    };
    let mut z = z_t.clone();
    let d = z.cols();
    let zs = z.as_mut_slice();
    let (gs, os) = (grad.as_slice(), z_orig.as_slice());
    for (i, &m) in mask.iter().enumerate() {
        let row = i * d..(i + 1) * d;
        if m {
            for j in row {
                zs[j] -= cfg.eta * gs[j];
            }
        } else {
            zs[row.clone()].copy_from_slice(&os[row]);
        }
    }
    phases.other += t1.elapsed();
    let t2 = Instant::now();
    let mut noise = rng::substream(noise_seed, &[domain::PROJECTION, step as u64]);
    let next = projector.project(&z, &mut noise);
    phases.projection += t2.elapsed();
    Ok(StepTrace { step, loss, mask, pre_projection: z, next })
}

/// Runs the masked, projected search from `z_orig` toward `cfg.target`.
///
/// Stops at the first iterate whose target confidence reaches `tau` and
/// whose decoded sequence differs from the original. Otherwise returns the
/// most confident iterate; the run is flagged adversarial when some iterate
/// reached `tau` without changing the sequence.
pub fn optimize(
    z_orig: &Embedding,
    predictor: &TrainedPredictor,
    projector: &Projector,
    cfg: &MccopConfig,
    noise_seed: u64,
) -> Result<CounterfactualResult> {
    optimize_observed(z_orig, predictor, projector, cfg, noise_seed, &mut |_| {})
}

/// [`optimize`] with a callback invoked after every step.
pub fn optimize_observed(
    z_orig: &Embedding,
    predictor: &TrainedPredictor,
    projector: &Projector,
    cfg: &MccopConfig,
    noise_seed: u64,
    observer: &mut dyn FnMut(&StepTrace),
) -> Result<CounterfactualResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut phases = PhaseTimes::default();
    let codebook = projector.codebook();
    let original = decode(z_orig, codebook);
    let conf0 = predictor.predict_proba(z_orig, cfg.target);
    let mut trace = vec![conf0];
    let mut best = (z_orig.clone(), conf0, original.clone());
    let mut reached_tau = false;
    let mut mask_union = vec![false; z_orig.rows()];
    let mut z = z_orig.clone();
    let mut found = None;
    for step in 0..cfg.t_max {
        let st = mccop_step(&z, z_orig, predictor, projector, cfg, step, noise_seed, &mut phases)?;
        observer(&st);
        for (u, &m) in mask_union.iter_mut().zip(&st.mask) {
            *u |= m;
        }
        z = st.next;
        let t0 = Instant::now();
        let conf = predictor.predict_proba(&z, cfg.target);
        phases.gradient += t0.elapsed();
        let t1 = Instant::now();
        let seq = decode(&z, codebook);
        trace.push(conf);
        let changed = seq != original;
        if conf >= cfg.tau {
            reached_tau = true;
            if changed {
                found = Some((z.clone(), conf, seq));
                phases.other += t1.elapsed();
                break;
            }
        }
        if conf > best.1 {
            best = (z.clone(), conf, seq);
        }
        phases.other += t1.elapsed();
    }
    let success = found.is_some();
    let (embedding, final_confidence, sequence) = found.unwrap_or(best);
    let edit_distance = differing(&sequence, &original);
    let leakage = (0..original.len()).filter(|&i| !mask_union[i] && sequence.get(i) != original.get(i)).count();
    let steps_used = trace.len() - 1;
    let mut duration = start.elapsed();
    duration = duration.max(phases.total());
    phases.other += duration.saturating_sub(phases.total());
    Ok(CounterfactualResult {
        embedding,
        sequence,
        original,
        success,
        adversarial: !success && reached_tau,
        steps_used,
        trace,
        final_confidence,
        edit_distance,
        duration,
        phases,
        mask_union,
        leakage,
    })
}
