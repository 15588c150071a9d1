use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latentworld::ResidueSequence;
use crate::optimizer::CounterfactualResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mccop,
    Gd,
    HillClimb,
    Ga,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mccop, Method::Gd, Method::HillClimb, Method::Ga];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mccop => "mccop",
            Method::Gd => "gd",
            Method::HillClimb => "hill_climb",
            Method::Ga => "ga",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, Method::HillClimb | Method::Ga)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown method {s:?} (expected mccop, gd, hill_climb or ga)")))
    }
}

/// One counterfactual search and where it came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub method: Method,
    pub seed: u64,
    /// Dataset item id of the source sequence.
    pub id: usize,
    pub result: CounterfactualResult,
}

pub fn hamming(a: &ResidueSequence, b: &ResidueSequence) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::data(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(a.indices().iter().zip(b.indices()).filter(|(x, y)| x != y).count())
}

/// Aggregates for one method over one list of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignMetrics {
    pub runs: usize,
    pub successes: usize,
    pub adversarial: usize,
    pub success_rate: f64,
    /// Adversarial runs over runs that reached the threshold; 0 when none did.
    pub adversarial_rate: f64,
    /// Mean and standard deviation over successful runs only.
    pub edit_mean: Option<f64>,
    pub edit_std: Option<f64>,
    pub mean_duration: f64,
}

fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

pub fn campaign_metrics<'a, I>(results: I) -> Result<CampaignMetrics>
where
    I: IntoIterator<Item = &'a CounterfactualResult>,
{
    let results: Vec<_> = results.into_iter().collect();
    if results.is_empty() {
        return Err(Error::data("no results to aggregate"));
    }
    let runs = results.len();
    let successes = results.iter().filter(|r| r.success).count();
    let adversarial = results.iter().filter(|r| r.adversarial).count();
    let edits: Vec<f64> = results.iter().filter(|r| r.success).map(|r| r.edit_distance as f64).collect();
    let es = mean_std(&edits);
    let reached = successes + adversarial;
    Ok(CampaignMetrics {
        runs,
        successes,
        adversarial,
        success_rate: successes as f64 / runs as f64,
        adversarial_rate: if reached == 0 { 0.0 } else { adversarial as f64 / reached as f64 },
        edit_mean: es.map(|e| e.0),
        edit_std: es.map(|e| e.1),
        mean_duration: results.iter().map(|r| r.duration.as_secs_f64()).sum::<f64>() / runs as f64,
    })
}

/// One row of `summary.csv`: rates as mean and standard deviation over
/// seeds, edit distance pooled over every successful run of every seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub seeds: usize,
    pub runs: usize,
    pub success_rate: (f64, f64),
    pub adversarial_rate: (f64, f64),
    pub edit: Option<(f64, f64)>,
    pub mean_duration: f64,
}

impl MethodSummary {
    /// Fixed-precision CSV fields, without the method column.
    pub fn metric_fields(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.6}");
        let (em, es) = self.edit.map(|(m, s)| (f(m), f(s))).unwrap_or_default();
        vec![
            self.seeds.to_string(),
            self.runs.to_string(),
            f(self.success_rate.0),
            f(self.success_rate.1),
            f(self.adversarial_rate.0),
            f(self.adversarial_rate.1),
            em,
            es,
        ]
    }
}

/// Summaries per method, in `Method` order, from records of any number of seeds.
pub fn merge_seeds(records: &[SampleRecord]) -> Result<Vec<MethodSummary>> {
    let mut out = Vec::new();
    for method in Method::ALL {
        let mine: Vec<&SampleRecord> = records.iter().filter(|r| r.method == method).collect();
        if mine.is_empty() {
            continue;
        }
        let mut seeds: Vec<u64> = mine.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        let per_seed = seeds
            .iter()
            .map(|&s| campaign_metrics(mine.iter().filter(|r| r.seed == s).map(|r| &r.result)))
            .collect::<Result<Vec<_>>>()?;
        let pooled = campaign_metrics(mine.iter().map(|r| &r.result))?;
        let sr: Vec<f64> = per_seed.iter().map(|m| m.success_rate).collect();
        let ar: Vec<f64> = per_seed.iter().map(|m| m.adversarial_rate).collect();
        out.push(MethodSummary {
            method,
            seeds: seeds.len(),
            runs: pooled.runs,
            success_rate: mean_std(&sr).expect("nonempty"),
            adversarial_rate: mean_std(&ar).expect("nonempty"),
            edit: pooled.edit_mean.zip(pooled.edit_std),
            mean_duration: pooled.mean_duration,
        });
    }
    Ok(out)
}
