use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::discrete::{batched, finish_phases, point_mutation};
use crate::error::{Error, Result};
use crate::latentworld::{Codebook, ResidueSequence};
use crate::optimizer::{differing, CounterfactualResult, PhaseTimes};
use crate::predictor::TrainedPredictor;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HillClimbConfig {
    pub steps: usize,
    pub tau: f64,
    pub mutations_per_step: usize,
    pub target: i8,
}

impl Default for HillClimbConfig {
    fn default() -> Self {
        HillClimbConfig { steps: 50, tau: 0.95, mutations_per_step: 1, target: 1 }
    }
}

impl HillClimbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.mutations_per_step == 0 {
            return Err(Error::config("hill climbing needs at least one step and one mutation per step"));
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

pub fn hill_climb(
    seq_orig: &ResidueSequence,
    codebook: &Codebook,
    predictor: &TrainedPredictor,
    cfg: &HillClimbConfig,
    rng: &mut Rng,
) -> Result<CounterfactualResult> {
    hill_climb_traced(seq_orig, codebook, predictor, cfg, rng).map(|(r, _)| r)
}

/// Also returns, per step, whether the proposal was accepted.
pub fn hill_climb_traced(
    seq_orig: &ResidueSequence,
    codebook: &Codebook,
    predictor: &TrainedPredictor,
    cfg: &HillClimbConfig,
    rng: &mut Rng,
) -> Result<(CounterfactualResult, Vec<bool>)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut phases = PhaseTimes::default();
    let score = |s: &ResidueSequence, phases: &mut PhaseTimes| {
        batched(std::slice::from_ref(s), codebook, predictor, cfg.target, 1, phases).map(|mut v| v.remove(0))
    };
    let (mut conf, mut z) = score(seq_orig, &mut phases)?;
    let mut seq = seq_orig.clone();
    let mut trace = vec![conf];
    let mut accepted = Vec::new();
    for _ in 0..cfg.steps {
        if conf >= cfg.tau {
            break;
        }
        let mut cand = seq.clone();
        for _ in 0..cfg.mutations_per_step {
            point_mutation(&mut cand, codebook.alphabet_size(), rng);
        }
        let (c, zc) = score(&cand, &mut phases)?;
        let take = c > conf;
        if take {
            seq = cand;
            conf = c;
            z = zc;
        }
        accepted.push(take);
        trace.push(conf);
    }
    let edit_distance = differing(&seq, seq_orig);
    let success = conf >= cfg.tau && edit_distance > 0;
    let (duration, phases) = finish_phases(start, phases);
    let result = CounterfactualResult {
        embedding: z,
        sequence: seq,
        original: seq_orig.clone(),
        success,
        adversarial: false,
        steps_used: trace.len() - 1,
        trace,
        final_confidence: conf,
        edit_distance,
        duration,
        phases,
        mask_union: vec![false; seq_orig.len()],
        leakage: edit_distance,
    };
    Ok((result, accepted))
}
