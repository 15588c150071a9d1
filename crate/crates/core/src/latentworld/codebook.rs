use ndarray::{Array2, ArrayView1};
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::sequence::{ResidueSequence, ALPHABET};
use crate::error::{Error, Result};
use crate::gradcore::Embedding;
use crate::rng::{self, Rng};

const MAX_ATTEMPTS: u64 = 8;
const REPULSION_SWEEPS: usize = 2000;
/// Pairs are pushed a little past the target so the loop terminates.
const OVERSHOOT: f64 = 1.0 + 1e-6;

/// One codeword per residue; row `a` represents `ALPHABET[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    codewords: Array2<f64>,
    min_separation: f64,
}

impl Codebook {
    /// Wraps an explicit codeword matrix, checking the separation invariant.
    pub fn new(codewords: Array2<f64>, min_separation: f64) -> Result<Self> {
        let a = codewords.nrows();
        if a == 0 || a > ALPHABET.len() || codewords.ncols() == 0 {
            return Err(Error::config(format!("codebook shape {}x{} not supported", a, codewords.ncols())));
        }
        if !(min_separation > 0.0) || codewords.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("codebook needs finite rows and positive separation"));
        }
        let cb = Codebook { codewords, min_separation };
        if cb.closest_pair_distance() < min_separation {
            return Err(Error::config("codewords closer than min_separation"));
        }
        Ok(cb)
    }

    pub fn alphabet_size(&self) -> usize {
        self.codewords.nrows()
    }

    pub fn dim(&self) -> usize {
        self.codewords.ncols()
    }

    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    pub fn codewords(&self) -> &Array2<f64> {
        &self.codewords
    }

    pub fn codeword(&self, residue: u8) -> ArrayView1<'_, f64> {
        self.codewords.row(residue as usize)
    }

    /// Smallest distance between two distinct codewords (infinite for A = 1).
    pub fn closest_pair_distance(&self) -> f64 {
        let a = self.alphabet_size();
        let mut best = f64::INFINITY;
        for i in 0..a {
            for j in i + 1..a {
                best = best.min(sq_dist(self.codewords.row(i), self.codewords.row(j)).sqrt());
            }
        }
        best
    }

    /// Index of the codeword nearest to `row`, lowest index on ties.
    pub fn nearest(&self, row: &[f64]) -> u8 {
        let mut best = (0u8, f64::INFINITY);
        for (a, cw) in self.codewords.outer_iter().enumerate() {
            let d: f64 = cw.iter().zip(row).map(|(c, x)| (c - x) * (c - x)).sum();
            if d < best.1 {
                best = (a as u8, d);
            }
        }
        best.0
    }

    /// Distance from `row` to its nearest codeword.
    pub fn distance_to_nearest(&self, row: &[f64]) -> f64 {
        self.codewords
            .outer_iter()
            .map(|cw| cw.iter().zip(row).map(|(c, x)| (c - x) * (c - x)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Builds a deterministic codebook with pairwise distances of at least
/// `min_separation`.
///
/// Rows start as Gaussian draws whose typical pairwise distance is about
/// 1.5 × `min_separation`; offending pairs are then pushed apart
/// symmetrically until the invariant holds.
pub fn build_codebook(alphabet_size: usize, dim: usize, seed: u64, min_separation: f64) -> Result<Codebook> {
    if alphabet_size == 0 || alphabet_size > ALPHABET.len() {
        return Err(Error::config(format!("alphabet size must be in 1..=20, got {alphabet_size}")));
    }
    if dim == 0 {
        return Err(Error::config("latent dimension must be positive"));
    }
    if !(min_separation > 0.0 && min_separation.is_finite()) {
        return Err(Error::config(format!("min_separation must be positive, got {min_separation}")));
    }
    let spread = 1.5 * min_separation / (2.0 * dim as f64).sqrt();
    for attempt in 0..MAX_ATTEMPTS {
        let mut r = rng::substream(seed, &[rng::domain::CODEBOOK, attempt]);
        let mut cw = Array2::from_shape_fn((alphabet_size, dim), |_| spread * r.sample::<f64, _>(StandardNormal));
        if repel(&mut cw, min_separation, &mut r) {
            return Codebook::new(cw, min_separation);
        }
    }
    Err(Error::config(format!(
        "could not place {alphabet_size} codewords in {dim} dimensions with separation {min_separation}"
    )))
}

fn repel(cw: &mut Array2<f64>, sep: f64, r: &mut Rng) -> bool {
    let (a, d) = cw.dim();
    for _ in 0..REPULSION_SWEEPS {
        let mut clean = true;
        for i in 0..a {
            for j in i + 1..a {
                let dist = sq_dist(cw.row(i), cw.row(j)).sqrt();
                if dist >= sep {
                    continue;
                }
                clean = false;
                let mut dir: Vec<f64> = (0..d).map(|c| cw[[i, c]] - cw[[j, c]]).collect();
                if dist < 1e-12 {
                    dir.iter_mut().for_each(|v| *v = r.sample(StandardNormal));
                }
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                let push = 0.5 * (sep * OVERSHOOT - dist.min(sep));
                for c in 0..d {
                    let delta = push * dir[c] / norm;
                    cw[[i, c]] += delta;
                    cw[[j, c]] -= delta;
                }
            }
        }
        if clean {
            return true;
        }
    }
    false
}

/// Encodes a sequence row by row: codeword plus isotropic Gaussian jitter.
pub fn encode(seq: &ResidueSequence, codebook: &Codebook, jitter_sigma: f64, rng: &mut Rng) -> Result<Embedding> {
    let d = codebook.dim();
    let mut data = Vec::with_capacity(seq.len() * d);
    for &res in seq.indices() {
        if res as usize >= codebook.alphabet_size() {
            return Err(Error::data(format!(
                "residue '{}' outside the {}-letter world alphabet",
                ALPHABET[res as usize] as char,
                codebook.alphabet_size()
            )));
        }
        let cw = codebook.codeword(res);
        if jitter_sigma > 0.0 {
            data.extend(cw.iter().map(|&c| c + jitter_sigma * rng.sample::<f64, _>(StandardNormal)));
        } else {
            data.extend(cw.iter().copied());
        }
    }
    Embedding::from_rows(seq.len(), d, data)
}

/// Encodes without jitter; no randomness involved.
pub fn encode_exact(seq: &ResidueSequence, codebook: &Codebook) -> Result<Embedding> {
    let mut unused = rng::seeded(0);
    encode(seq, codebook, 0.0, &mut unused)
}

/// Nearest-codeword decoding, one residue per row.
pub fn decode(z: &Embedding, codebook: &Codebook) -> ResidueSequence {
    assert_eq!(z.cols(), codebook.dim(), "embedding width differs from codebook dimension");
    let idx = (0..z.rows()).map(|i| codebook.nearest(z.row(i).as_slice().expect("standard layout"))).collect();
    ResidueSequence::from_indices(idx).expect("codebook indices lie in the alphabet")
}
