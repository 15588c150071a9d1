use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::discrete::finish_phases;
use crate::error::{Error, Result};
use crate::gradcore::{AdamState, Embedding};
use crate::latentworld::{decode, Codebook};
use crate::optimizer::{differing, CounterfactualResult, PhaseTimes};
use crate::predictor::TrainedPredictor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub tau: f64,
    pub target: i8,
}

impl Default for GdConfig {
    fn default() -> Self {
        GdConfig { learning_rate: 1e-2, steps: 50, tau: 0.95, target: 1 }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::config("gradient descent needs at least one step"));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::config("learning rate must be non-negative"));
        }
        if !(self.tau > 0.5 && self.tau <= 1.0) {
            return Err(Error::config("tau must lie in (0.5, 1]"));
        }
        if self.target != 1 && self.target != -1 {
            return Err(Error::config("target must be -1 or +1"));
        }
        Ok(())
    }
}

/// Adam on `z` against binary cross-entropy toward the target class, with no
/// mask, reset or projection. Stops once an iterate is confident and decodes
/// to a new sequence; otherwise keeps the most confident iterate.
pub fn gd_counterfactual(
    z_orig: &Embedding,
    predictor: &TrainedPredictor,
    codebook: &Codebook,
    cfg: &GdConfig,
) -> Result<CounterfactualResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut phases = PhaseTimes::default();
    let y = f64::from(cfg.target);
    let original = decode(z_orig, codebook);
    let mut z = z_orig.clone();
    let mut adam = AdamState::new(cfg.learning_rate);
    let conf0 = predictor.predict_proba(z_orig, cfg.target);
    let mut trace = vec![conf0];
    let mut best = (z.clone(), conf0, original.clone());
    let mut reached_tau = false;
    let mut found = None;
    for _ in 0..cfg.steps {
        let t0 = Instant::now();
        let (f, mut g) = predictor.logit_gradient(&z);
        // d/df of log(1 + exp(-y f))
        let dl = -y * crate::gradcore::logistic(-y * f);
        g.as_mut_slice().iter_mut().for_each(|v| *v *= dl);
        phases.gradient += t0.elapsed();
        if !f.is_finite() || !g.is_finite() {
            break;
        }
        let t1 = Instant::now();
        adam.step(&mut [z.as_mut_slice()], &[g.as_slice()]);
        phases.other += t1.elapsed();
        let t2 = Instant::now();
        let conf = predictor.predict_proba(&z, cfg.target);
        phases.gradient += t2.elapsed();
        let t3 = Instant::now();
        trace.push(conf);
        let seq = decode(&z, codebook);
        let changed = seq != original;
        if conf >= cfg.tau {
            reached_tau = true;
            if changed {
                found = Some((z.clone(), conf, seq));
                phases.other += t3.elapsed();
                break;
            }
        }
        if conf > best.1 {
            best = (z.clone(), conf, seq);
        }
        phases.other += t3.elapsed();
    }
    let success = found.is_some();
    let (embedding, final_confidence, sequence) = found.unwrap_or(best);
    let edit_distance = differing(&sequence, &original);
    let (duration, phases) = finish_phases(start, phases);
    Ok(CounterfactualResult {
        embedding,
        steps_used: trace.len() - 1,
        mask_union: vec![false; original.len()],
        // Without a mask every changed position counts as unmasked.
        leakage: edit_distance,
        sequence,
        original,
        success,
        adversarial: !success && reached_tau,
        trace,
        final_confidence,
        edit_distance,
        duration,
        phases,
    })
}
