use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use super::metrics::{Method, SampleRecord};
use crate::error::{Error, Result};
use crate::gradcore::Embedding;
use crate::latentworld::{Codebook, LabeledDataset, ResidueSequence, Split, ALPHABET};

const KYTE_DOOLITTLE: &str = include_str!("../../data/kyte_doolittle.csv");

fn table() -> &'static HashMap<char, f64> {
    static TABLE: OnceLock<HashMap<char, f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rdr = csv::Reader::from_reader(KYTE_DOOLITTLE.as_bytes());
        rdr.records()
            .map(|r| {
                let r = r.expect("bundled hydropathy table");
                (r[0].chars().next().expect("residue"), r[1].parse().expect("hydropathy"))
            })
            .collect()
    })
}

/// Kyte-Doolittle hydropathy of a one-letter residue code.
pub fn hydropathy(residue: char) -> Result<f64> {
    table().get(&residue).copied().ok_or_else(|| Error::data(format!("no hydropathy value for {residue:?}")))
}

/// Grand average of hydropathy.
pub fn gravy(seq: &ResidueSequence) -> Result<f64> {
    let mut sum = 0.0;
    for &r in seq.indices() {
        let c = *ALPHABET.get(r as usize).ok_or_else(|| Error::data(format!("residue index {r} out of range")))?;
        sum += hydropathy(c as char)?;
    }
    Ok(sum / seq.len() as f64)
}

/// Mean distance from each row to its nearest codeword. A plausibility
/// proxy: zero exactly when every row is a codeword.
pub fn manifold_distance(z: &Embedding, codebook: &Codebook) -> f64 {
    let rows = z.rows();
    (0..rows).map(|i| codebook.distance_to_nearest(z.row(i).as_slice().expect("contiguous row"))).sum::<f64>()
        / rows as f64
}

/// Property means over successful runs with an exact edit distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceRow {
    pub method: Method,
    pub edit_distance: usize,
    pub count: usize,
    pub gravy_mean: Option<f64>,
    pub manifold_mean: Option<f64>,
}

pub fn slice_by_edit_distance(records: &[SampleRecord], d: usize, codebook: &Codebook) -> Result<Vec<SliceRow>> {
    if d == 0 {
        return Err(Error::config("slice edit distance must be at least 1"));
    }
    let mut out = Vec::new();
    for method in Method::ALL {
        if !records.iter().any(|r| r.method == method) {
            continue;
        }
        let hits: Vec<&SampleRecord> =
            records.iter().filter(|r| r.method == method && r.result.success && r.result.edit_distance == d).collect();
        let n = hits.len();
        let (gravy_mean, manifold_mean) = if n == 0 {
            (None, None)
        } else {
            let g = hits.iter().map(|r| gravy(&r.result.sequence)).collect::<Result<Vec<_>>>()?;
            let m: f64 = hits.iter().map(|r| manifold_distance(&r.result.embedding, codebook)).sum();
            (Some(g.iter().sum::<f64>() / n as f64), Some(m / n as f64))
        };
        out.push(SliceRow { method, edit_distance: d, count: n, gravy_mean, manifold_mean });
    }
    Ok(out)
}

/// Mean wall-clock time per sample and the share of each phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub method: Method,
    pub mean_seconds: f64,
    pub gradient_share: f64,
    pub projection_share: f64,
    pub encoding_share: f64,
    pub other_share: f64,
}

pub fn timing_profile(records: &[SampleRecord]) -> Vec<TimingRow> {
    let mut out = Vec::new();
    for method in Method::ALL {
        let mine: Vec<_> = records.iter().filter(|r| r.method == method).collect();
        if mine.is_empty() {
            continue;
        }
        let sum = |f: &dyn Fn(&SampleRecord) -> f64| mine.iter().map(|r| f(r)).sum::<f64>();
        let grad = sum(&|r| r.result.phases.gradient.as_secs_f64());
        let proj = sum(&|r| r.result.phases.projection.as_secs_f64());
        let enc = sum(&|r| r.result.phases.encoding.as_secs_f64());
        let other = sum(&|r| r.result.phases.other.as_secs_f64());
        let total = grad + proj + enc + other;
        let share = |x: f64| if total > 0.0 { x / total } else { 0.0 };
        out.push(TimingRow {
            method,
            mean_seconds: sum(&|r| r.result.duration.as_secs_f64()) / mine.len() as f64,
            gradient_share: share(grad),
            projection_share: share(proj),
            encoding_share: share(enc),
            other_share: share(other),
        });
    }
    out
}

/// A successful counterfactual that already exists in the dataset with the
/// target label.
#[derive(Debug, Clone, PartialEq)]
pub struct Rediscovery {
    pub method: Method,
    pub seed: u64,
    pub source_id: usize,
    pub match_id: usize,
    pub split: Split,
}

/// `target_label` is the 0/1 class the counterfactuals were pushed toward.
pub fn rediscovery_check(records: &[SampleRecord], dataset: &LabeledDataset, target_label: u8) -> Vec<Rediscovery> {
    let mut index: HashMap<&ResidueSequence, Vec<usize>> = HashMap::new();
    for (pos, item) in dataset.items.iter().enumerate() {
        if item.label == target_label {
            index.entry(&item.sequence).or_default().push(pos);
        }
    }
    let mut out = Vec::new();
    for r in records.iter().filter(|r| r.result.success) {
        for &pos in index.get(&r.result.sequence).map(Vec::as_slice).unwrap_or(&[]) {
            let item = &dataset.items[pos];
            out.push(Rediscovery {
                method: r.method,
                seed: r.seed,
                source_id: r.id,
                match_id: item.id,
                split: item.split,
            });
        }
    }
    out
}

/// How often each (position, new residue) appears among successful runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationCount {
    pub method: Method,
    pub position: usize,
    pub residue: char,
    pub count: usize,
}

pub fn mutation_frequencies(records: &[SampleRecord]) -> Vec<MutationCount> {
    let mut counts: BTreeMap<(Method, usize, char), usize> = BTreeMap::new();
    for r in records.iter().filter(|r| r.result.success) {
        for p in r.result.mutated_positions() {
            *counts.entry((r.method, p, r.result.sequence.residue(p))).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|((method, position, residue), count)| MutationCount { method, position, residue, count })
        .collect()
}
