use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::codebook::{build_codebook, Codebook};
use super::sequence::{ResidueSequence, ALPHABET};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// A position that adds `weight` to the score when it holds `residue`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifSite {
    pub position: usize,
    pub residue: char,
    pub weight: f64,
}

/// Two positions that add `bonus` only when both hold their residues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpistaticPair {
    pub pos_i: usize,
    pub pos_j: usize,
    pub residue_i: char,
    pub residue_j: char,
    pub bonus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    /// Sequence length L.
    pub length: usize,
    /// Latent dimension D.
    pub dim: usize,
    /// Alphabet size A; the world uses the first A letters of `ALPHABET`.
    pub alphabet_size: usize,
    pub min_separation: f64,
    /// Encoder jitter; `None` means `min_separation / 10`.
    pub jitter_sigma: Option<f64>,
    pub motif: Vec<MotifSite>,
    pub epistatic_pairs: Vec<EpistaticPair>,
    /// Probability of flipping a label when a dataset is drawn.
    pub label_noise: f64,
    /// Probability that a scored site is planted with its motif residue
    /// when sampling sequences, so both classes are well represented.
    pub site_bias: f64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            length: 10,
            dim: 40,
            alphabet_size: 20,
            min_separation: 7.0,
            jitter_sigma: None,
            motif: vec![
                MotifSite { position: 2, residue: 'W', weight: 1.0 },
                MotifSite { position: 5, residue: 'K', weight: 1.0 },
                MotifSite { position: 8, residue: 'F', weight: 1.0 },
            ],
            epistatic_pairs: Vec::new(),
            label_noise: 0.0,
            site_bias: 0.5,
            seed: 7,
        }
    }
}

impl WorldConfig {
    pub fn jitter(&self) -> f64 {
        self.jitter_sigma.unwrap_or(self.min_separation / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 || self.dim == 0 {
            return Err(Error::config("world length and dim must be positive"));
        }
        if self.alphabet_size == 0 || self.alphabet_size > ALPHABET.len() {
            return Err(Error::config(format!("alphabet_size must be in 1..=20, got {}", self.alphabet_size)));
        }
        if !(self.min_separation > 0.0) {
            return Err(Error::config("min_separation must be positive"));
        }
        let jitter = self.jitter();
        if !(jitter >= 0.0 && jitter < self.min_separation / 2.0) {
            return Err(Error::config(format!("jitter_sigma {jitter} must lie in [0, min_separation/2)")));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return Err(Error::config("label_noise must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.site_bias) {
            return Err(Error::config("site_bias must lie in [0, 1]"));
        }
        for m in &self.motif {
            self.check_site(m.position, m.residue)?;
        }
        for p in &self.epistatic_pairs {
            self.check_site(p.pos_i, p.residue_i)?;
            self.check_site(p.pos_j, p.residue_j)?;
            if p.pos_i == p.pos_j {
                return Err(Error::config("epistatic pair needs two distinct positions"));
            }
        }
        Ok(())
    }

    fn check_site(&self, position: usize, residue: char) -> Result<()> {
        if position >= self.length {
            return Err(Error::config(format!("site position {position} beyond length {}", self.length)));
        }
        match ResidueSequence::index_of(residue) {
            Some(i) if (i as usize) < self.alphabet_size => Ok(()),
            _ => Err(Error::config(format!("site residue '{residue}' not in the world alphabet"))),
        }
    }

    /// (position, residue index) pairs that enter the score.
    pub fn scored_sites(&self) -> Vec<(usize, u8)> {
        let mut sites: Vec<(usize, u8)> = self
            .motif
            .iter()
            .map(|m| (m.position, m.residue))
            .chain(self.epistatic_pairs.iter().flat_map(|p| [(p.pos_i, p.residue_i), (p.pos_j, p.residue_j)]))
            .filter_map(|(p, c)| ResidueSequence::index_of(c).map(|i| (p, i)))
            .collect();
        sites.sort_unstable();
        sites.dedup();
        sites
    }
}

/// Deterministic fitness: motif matches times weight plus pair bonuses.
pub fn ground_truth_score(seq: &ResidueSequence, world: &WorldConfig) -> Result<f64> {
    if seq.len() != world.length {
        return Err(Error::data(format!("sequence length {} differs from world length {}", seq.len(), world.length)));
    }
    let holds = |pos: usize, c: char| seq.residue(pos) == c;
    let mut score = 0.0;
    for m in &world.motif {
        if holds(m.position, m.residue) {
            score += m.weight;
        }
    }
    for p in &world.epistatic_pairs {
        if holds(p.pos_i, p.residue_i) && holds(p.pos_j, p.residue_j) {
            score += p.bonus;
        }
    }
    Ok(score)
}

/// A validated world with its codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub config: WorldConfig,
    pub codebook: Codebook,
}

impl World {
    pub fn new(config: WorldConfig) -> Result<Self> {
        config.validate()?;
        let codebook = build_codebook(config.alphabet_size, config.dim, config.seed, config.min_separation)?;
        Ok(World { config, codebook })
    }

    pub fn score(&self, seq: &ResidueSequence) -> Result<f64> {
        ground_truth_score(seq, &self.config)
    }

    /// Uniform residues, except scored sites which take one of their motif
    /// residues with probability `site_bias`.
    pub fn sample_sequence(&self, rng: &mut Rng) -> ResidueSequence {
        let a = self.config.alphabet_size as u8;
        let sites = self.config.scored_sites();
        let idx = (0..self.config.length)
            .map(|pos| {
                let planted: Vec<u8> = sites.iter().filter(|s| s.0 == pos).map(|s| s.1).collect();
                if !planted.is_empty() && rng.random::<f64>() < self.config.site_bias {
                    planted[rng.random_range(0..planted.len())]
                } else {
                    rng.random_range(0..a)
                }
            })
            .collect();
        ResidueSequence::from_indices(idx).expect("indices drawn inside the alphabet")
    }
}
