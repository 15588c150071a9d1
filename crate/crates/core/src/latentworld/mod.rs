//! Synthetic position-wise latent space.
//!
//! Each residue of a sequence is encoded as its codeword plus optional
//! Gaussian jitter; decoding is nearest-codeword per row, so residue `i`
//! depends only on row `i`. A ground-truth scorer with motif and epistatic
//! pair terms supplies labels.

mod binarize;
mod codebook;
mod dataset;
mod sequence;
mod world;

pub use binarize::{binarize_middle_tercile, otsu_threshold, percentile, OTSU_BINS};
pub use codebook::{build_codebook, decode, encode, encode_exact, Codebook};
pub use dataset::{make_dataset, Binarization, DatasetItem, LabeledDataset, Split};
pub use sequence::{ResidueSequence, ALPHABET};
pub use world::{ground_truth_score, EpistaticPair, MotifSite, World, WorldConfig};
