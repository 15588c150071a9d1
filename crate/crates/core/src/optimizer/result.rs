use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::gradcore::Embedding;
use crate::latentworld::ResidueSequence;

/// Wall-clock time spent in each phase of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    /// Predictor forward and backward passes.
    pub gradient: Duration,
    /// Noising and denoising.
    pub projection: Duration,
    /// Turning candidate sequences into embeddings.
    pub encoding: Duration,
    /// Decoding, confidence checks and bookkeeping.
    pub other: Duration,
}

impl PhaseTimes {
    pub fn total(&self) -> Duration {
        self.gradient + self.projection + self.encoding + self.other
    }
}

/// Outcome of one counterfactual search, shared by all methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualResult {
    pub embedding: Embedding,
    pub sequence: ResidueSequence,
    pub original: ResidueSequence,
    /// Confidence reached the threshold with a changed sequence.
    pub success: bool,
    /// Confidence reached the threshold only with the original sequence.
    pub adversarial: bool,
    pub steps_used: usize,
    /// Target-class confidence at the start and after every step.
    pub trace: Vec<f64>,
    pub final_confidence: f64,
    pub edit_distance: usize,
    pub duration: Duration,
    pub phases: PhaseTimes,
    /// Positions selected by any step's mask (all false for discrete methods).
    pub mask_union: Vec<bool>,
    /// Changed positions outside `mask_union`; only projection can cause these.
    pub leakage: usize,
}

impl CounterfactualResult {
    /// Positions where the returned sequence differs from the original.
    pub fn mutated_positions(&self) -> Vec<usize> {
        (0..self.original.len()).filter(|&i| self.sequence.get(i) != self.original.get(i)).collect()
    }
}

/// Hamming distance for sequences known to have equal length.
pub(crate) fn differing(a: &ResidueSequence, b: &ResidueSequence) -> usize {
    debug_assert_eq!(a.len(), b.len());
    a.indices().iter().zip(b.indices()).filter(|(x, y)| x != y).count()
}
