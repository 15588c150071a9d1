use std::time::{Duration, Instant};

use rand::Rng as _;

use crate::error::Result;
use crate::gradcore::Embedding;
use crate::latentworld::{encode_exact, Codebook, ResidueSequence};
use crate::optimizer::PhaseTimes;
use crate::predictor::TrainedPredictor;
use crate::rng::Rng;

/// Target-class probability of the zero-jitter encoding of `seq`.
pub fn confidence(seq: &ResidueSequence, codebook: &Codebook, predictor: &TrainedPredictor, target: i8) -> Result<f64> {
    let z = encode_exact(seq, codebook)?;
    Ok(predictor.predict_proba(&z, target))
}

/// [`confidence`] for many sequences, evaluated in micro-batches.
pub fn confidences(
    seqs: &[ResidueSequence],
    codebook: &Codebook,
    predictor: &TrainedPredictor,
    target: i8,
    batch: usize,
) -> Result<Vec<f64>> {
    let mut timer = PhaseTimes::default();
    batched(seqs, codebook, predictor, target, batch, &mut timer).map(|v| v.into_iter().map(|(c, _)| c).collect())
}

/// Encodes and scores `seqs`, charging time to the encoding and predictor
/// phases. Returns each confidence with its embedding.
pub(super) fn batched(
    seqs: &[ResidueSequence],
    codebook: &Codebook,
    predictor: &TrainedPredictor,
    target: i8,
    batch: usize,
    phases: &mut PhaseTimes,
) -> Result<Vec<(f64, Embedding)>> {
    let mut out = Vec::with_capacity(seqs.len());
    for chunk in seqs.chunks(batch.max(1)) {
        let t0 = Instant::now();
        let zs = chunk.iter().map(|s| encode_exact(s, codebook)).collect::<Result<Vec<_>>>()?;
        phases.encoding += t0.elapsed();
        let t1 = Instant::now();
        let refs: Vec<&Embedding> = zs.iter().collect();
        let logits = predictor.predict_logits(&refs);
        phases.gradient += t1.elapsed();
        let y = f64::from(target);
        out.extend(logits.into_iter().zip(zs).map(|(f, z)| (crate::gradcore::logistic(y * f), z)));
    }
    Ok(out)
}

/// Replaces one uniformly chosen position with a uniformly chosen different
/// residue.
pub(super) fn point_mutation(seq: &mut ResidueSequence, alphabet: usize, rng: &mut Rng) {
    let pos = rng.random_range(0..seq.len());
    let current = seq.get(pos);
    let mut r = rng.random_range(0..alphabet as u8 - 1);
    if r >= current {
        r += 1;
    }
    seq.set(pos, r);
}

pub(super) fn finish_phases(start: Instant, mut phases: PhaseTimes) -> (Duration, PhaseTimes) {
    let total = start.elapsed().max(phases.total());
    phases.other += total.saturating_sub(phases.total());
    (total, phases)
}
