use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::binarize::{binarize_middle_tercile, otsu_threshold};
use super::codebook::{decode, encode};
use super::sequence::ResidueSequence;
use super::world::{World, WorldConfig};
use crate::error::{Error, Result};
use crate::gradcore::Embedding;
use crate::rng;

const MAX_ATTEMPTS: u64 = 10;
const MIN_PER_CLASS: usize = 5;
const NOISE_KEY: u64 = u64::MAX;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORDS_FILE: &str = "records.csv";
pub const EMBEDDING_CACHE_FILE: &str = "embeddings.bin";
const CACHE_MAGIC: &[u8; 8] = b"MCCOPEMB";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binarization {
    #[default]
    Otsu,
    Tercile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub id: usize,
    pub sequence: ResidueSequence,
    pub raw_score: f64,
    pub label: u8,
    pub split: Split,
    pub embedding: Embedding,
}

/// How scores were turned into labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Cutoffs {
    /// Label 1 iff score >= threshold.
    Otsu { threshold: f64 },
    /// Label 0 below `lower`, 1 above `upper`, middle removed.
    Tercile { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub world: WorldConfig,
    pub seed: u64,
    pub requested: usize,
    pub attempt: u64,
    pub cutoffs: Cutoffs,
    pub label_flips: usize,
    /// Item counts per split and label.
    pub counts: BTreeMap<Split, [usize; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub world: World,
    pub manifest: Manifest,
    pub items: Vec<DatasetItem>,
}

impl LabeledDataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &DatasetItem> {
        self.items.iter().filter(move |it| it.split == split)
    }

    pub fn count(&self, split: Split, label: u8) -> usize {
        self.split(split).filter(|it| it.label == label).count()
    }

    /// Writes manifest and records; embeddings are regenerated on load
    /// unless `with_cache` also stores them.
    pub fn save(&self, dir: &Path, with_cache: bool) -> Result<()> {
        fs::create_dir_all(dir)?;
        let manifest = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(dir.join(MANIFEST_FILE), manifest + "\n")?;
        let mut w = csv::Writer::from_path(dir.join(RECORDS_FILE))?;
        w.write_record(["id", "sequence", "raw_score", "label", "split"])?;
        for it in &self.items {
            w.write_record([
                it.id.to_string(),
                it.sequence.to_string(),
                it.raw_score.to_string(),
                it.label.to_string(),
                it.split.to_string(),
            ])?;
        }
        w.flush()?;
        let cache = dir.join(EMBEDDING_CACHE_FILE);
        if with_cache {
            write_embedding_cache(&cache, self.items.iter().map(|it| &it.embedding))?;
        } else if cache.exists() {
            fs::remove_file(cache)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
        let world = World::new(manifest.world.clone())?;
        #[derive(Deserialize)]
        struct Record {
            id: usize,
            sequence: String,
            raw_score: f64,
            label: u8,
            split: Split,
        }
        let cache_path = dir.join(EMBEDDING_CACHE_FILE);
        let cached = if cache_path.exists() { Some(read_embedding_cache(&cache_path)?) } else { None };
        let mut items = Vec::new();
        for (pos, rec) in csv::Reader::from_path(dir.join(RECORDS_FILE))?.deserialize::<Record>().enumerate() {
            let rec = rec?;
            if rec.id != pos || rec.label > 1 {
                return Err(Error::data(format!("malformed record at row {pos}")));
            }
            let sequence: ResidueSequence = rec.sequence.parse()?;
            let embedding = match &cached {
                Some(c) => c.get(pos).cloned().ok_or_else(|| Error::data("embedding cache shorter than records"))?,
                None => embed_item(&world, manifest.seed, rec.id, &sequence)?,
            };
            if embedding.rows() != sequence.len() || decode(&embedding, &world.codebook) != sequence {
                return Err(Error::data(format!("embedding of record {pos} does not decode to its sequence")));
            }
            items.push(DatasetItem {
                id: rec.id,
                sequence,
                raw_score: rec.raw_score,
                label: rec.label,
                split: rec.split,
                embedding,
            });
        }
        if let Some(c) = &cached {
            if c.len() != items.len() {
                return Err(Error::data("embedding cache length differs from records"));
            }
        }
        Ok(LabeledDataset { world, manifest, items })
    }
}

fn embed_item(world: &World, seed: u64, id: usize, seq: &ResidueSequence) -> Result<Embedding> {
    let mut r = rng::substream(seed, &[rng::domain::EMBED, id as u64]);
    encode(seq, &world.codebook, world.config.jitter(), &mut r)
}

/// Draws `n` sequences, labels them, encodes them and splits 80/10/10
/// stratified by label. Regenerates with a fresh stream when a class ends
/// up too small to populate every split.
pub fn make_dataset(world: &World, n: usize, binarization: Binarization, seed: u64) -> Result<LabeledDataset> {
    if n < 30 {
        return Err(Error::config(format!("dataset needs at least 30 items, got {n}")));
    }
    let mut last_err = None;
    for attempt in 0..MAX_ATTEMPTS {
        match draw(world, n, binarization, seed, attempt) {
            Ok(ds) => return Ok(ds),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn draw(world: &World, n: usize, binarization: Binarization, seed: u64, attempt: u64) -> Result<LabeledDataset> {
    let seqs: Vec<ResidueSequence> = (0..n)
        .map(|i| world.sample_sequence(&mut rng::substream(seed, &[rng::domain::DATASET, attempt, i as u64])))
        .collect();
    let scores = seqs.iter().map(|s| world.score(s)).collect::<Result<Vec<_>>>()?;
    let (mut labels, keep, cutoffs) = match binarization {
        Binarization::Otsu => {
            let threshold = otsu_threshold(&scores)?;
            let labels = scores.iter().map(|&s| u8::from(s >= threshold)).collect();
            (labels, vec![true; n], Cutoffs::Otsu { threshold })
        }
        Binarization::Tercile => {
            let (labels, keep) = binarize_middle_tercile(&scores)?;
            let mut sorted = scores.clone();
            sorted.sort_by(f64::total_cmp);
            let lower = super::binarize::percentile(&sorted, 100.0 / 3.0);
            let upper = super::binarize::percentile(&sorted, 200.0 / 3.0);
            (labels, keep, Cutoffs::Tercile { lower, upper })
        }
    };
    let mut noise = rng::substream(seed, &[rng::domain::DATASET, attempt, NOISE_KEY]);
    let mut label_flips = 0;
    for l in labels.iter_mut() {
        if world.config.label_noise > 0.0 && noise.random::<f64>() < world.config.label_noise {
            *l = 1 - *l;
            label_flips += 1;
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (pos, &i) in kept.iter().enumerate() {
        by_class[labels[i] as usize].push(pos);
    }
    if by_class.iter().any(|c| c.len() < MIN_PER_CLASS) {
        return Err(Error::data(format!(
            "class sizes {} / {} too small to stratify",
            by_class[0].len(),
            by_class[1].len()
        )));
    }
    let mut splits = vec![Split::Train; kept.len()];
    let mut shuffle = rng::substream(seed, &[rng::domain::DATASET, attempt, NOISE_KEY - 1]);
    for class in by_class.iter_mut() {
        class.shuffle(&mut shuffle);
        let tenth = ((class.len() as f64) / 10.0).round().max(1.0) as usize;
        for &pos in &class[..tenth] {
            splits[pos] = Split::Val;
        }
        for &pos in &class[tenth..2 * tenth] {
            splits[pos] = Split::Test;
        }
    }
    let mut items = Vec::with_capacity(kept.len());
    for (id, &i) in kept.iter().enumerate() {
        let embedding = embed_item(world, seed, id, &seqs[i])?;
        items.push(DatasetItem {
            id,
            sequence: seqs[i].clone(),
            raw_score: scores[i],
            label: labels[i],
            split: splits[id],
            embedding,
        });
    }
    let mut counts = BTreeMap::new();
    for s in Split::ALL {
        counts.insert(s, [0usize; 2]);
    }
    for it in &items {
        counts.get_mut(&it.split).expect("all splits present")[it.label as usize] += 1;
    }
    let manifest = Manifest { world: world.config.clone(), seed, requested: n, attempt, cutoffs, label_flips, counts };
    Ok(LabeledDataset { world: world.clone(), manifest, items })
}

/// Binary cache: magic, version, item count, rows, cols, then row-major
/// little-endian f64 entries for each embedding in record order.
pub fn write_embedding_cache<'a>(path: &Path, embeddings: impl Iterator<Item = &'a Embedding>) -> Result<()> {
    let embeddings: Vec<&Embedding> = embeddings.collect();
    let (rows, cols) = embeddings.first().map_or((0, 0), |e| (e.rows(), e.cols()));
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&(embeddings.len() as u64).to_le_bytes())?;
    w.write_all(&(rows as u32).to_le_bytes())?;
    w.write_all(&(cols as u32).to_le_bytes())?;
    for e in embeddings {
        if (e.rows(), e.cols()) != (rows, cols) {
            return Err(Error::data("embedding cache requires equal shapes"));
        }
        for v in e.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_embedding_cache(path: &Path) -> Result<Vec<Embedding>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let bad = |why: &str| Error::Checkpoint { path: path.to_path_buf(), reason: why.to_string() };
    if bytes.len() < 28 || &bytes[..8] != CACHE_MAGIC {
        return Err(bad("not an embedding cache"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    if u32_at(8) != CACHE_VERSION {
        return Err(bad("unsupported cache version"));
    }
    let n = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let (rows, cols) = (u32_at(20) as usize, u32_at(24) as usize);
    let per = rows * cols;
    if bytes.len() != 28 + n * per * 8 {
        return Err(bad("cache size does not match its header"));
    }
    let floats: Vec<f64> =
        bytes[28..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    floats.chunks_exact(per.max(1)).take(n).map(|chunk| Embedding::from_rows(rows, cols, chunk.to_vec())).collect()
}
