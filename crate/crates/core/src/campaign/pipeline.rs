use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::CampaignConfig;
use crate::baselines::{gd_counterfactual, genetic_algorithm, hill_climb};
use crate::error::{Error, Result};
use crate::evaluation::{write_report, Method, SampleRecord};
use crate::latentworld::{make_dataset, DatasetItem, LabeledDataset, World};
use crate::optimizer::{optimize, CounterfactualResult};
use crate::predictor::{train_predictor, SmoothingConfig, TrainedPredictor};
use crate::projector::Projector;
use crate::rng::{derive_seed, domain, substream};

/// Builds the dataset and writes it under `<out>/data`.
pub fn gen_data(cfg: &CampaignConfig) -> Result<LabeledDataset> {
    let world = World::new(cfg.world.clone())?;
    let ds = make_dataset(&world, cfg.data.size, cfg.data.binarization, cfg.data.seed)?;
    ds.save(&cfg.data_dir(), cfg.data.embedding_cache)?;
    Ok(ds)
}

pub fn load_data(cfg: &CampaignConfig) -> Result<LabeledDataset> {
    let dir = cfg.data_dir();
    if !dir.join("manifest.json").exists() {
        return Err(Error::data(format!("no dataset at {}; run gen-data first", dir.display())));
    }
    let ds = LabeledDataset::load(&dir)?;
    if ds.world.config != cfg.world {
        return Err(Error::data("dataset was generated for a different world; rerun gen-data"));
    }
    Ok(ds)
}

/// The unsmoothed and smoothed predictor trained with one seed.
#[derive(Debug, Clone)]
pub struct SeedModels {
    pub seed: u64,
    pub unsmoothed: TrainedPredictor,
    pub smoothed: TrainedPredictor,
}

impl SeedModels {
    /// Gradient descent works on the plain predictor; every other method
    /// uses the smoothed one.
    pub fn for_method(&self, method: Method) -> &TrainedPredictor {
        match method {
            Method::Gd => &self.unsmoothed,
            _ => &self.smoothed,
        }
    }
}

/// Trains both predictors for every seed, in parallel, without touching disk.
pub fn train_models(cfg: &CampaignConfig, ds: &LabeledDataset) -> Result<Vec<SeedModels>> {
    let jobs: Vec<(u64, bool)> = cfg.seeds.iter().flat_map(|&s| [(s, false), (s, true)]).collect();
    let trained = cfg.pool()?.install(|| {
        jobs.par_iter()
            .map(|&(seed, smoothed)| {
                let sm = if smoothed { cfg.smoothing.clone() } else { SmoothingConfig::none() };
                train_predictor(ds, &sm, &cfg.train, seed)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut it = trained.into_iter();
    Ok(cfg
        .seeds
        .iter()
        .map(|&seed| SeedModels { seed, unsmoothed: it.next().expect("paired"), smoothed: it.next().expect("paired") })
        .collect())
}

/// One line of `smoothing.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingRow {
    pub seed: String,
    pub auroc_unsmoothed: f64,
    pub auroc_smoothed: f64,
    pub grad_norm_unsmoothed: f64,
    pub grad_norm_smoothed: f64,
}

/// One row per seed plus a `mean` row.
pub fn write_smoothing_table(path: &Path, models: &[SeedModels]) -> Result<Vec<SmoothingRow>> {
    let mut rows: Vec<SmoothingRow> = models
        .iter()
        .map(|m| SmoothingRow {
            seed: m.seed.to_string(),
            auroc_unsmoothed: m.unsmoothed.report().test_auroc,
            auroc_smoothed: m.smoothed.report().test_auroc,
            grad_norm_unsmoothed: m.unsmoothed.report().avg_grad_norm,
            grad_norm_smoothed: m.smoothed.report().avg_grad_norm,
        })
        .collect();
    let n = rows.len() as f64;
    let mean = |f: fn(&SmoothingRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let agg = SmoothingRow {
        seed: "mean".into(),
        auroc_unsmoothed: mean(|r| r.auroc_unsmoothed),
        auroc_smoothed: mean(|r| r.auroc_smoothed),
        grad_norm_unsmoothed: mean(|r| r.grad_norm_unsmoothed),
        grad_norm_smoothed: mean(|r| r.grad_norm_smoothed),
    };
    rows.push(agg);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["seed", "auroc_unsmoothed", "auroc_smoothed", "grad_norm_unsmoothed", "grad_norm_smoothed"])?;
    for r in &rows {
        w.write_record([
            r.seed.clone(),
            format!("{:.6}", r.auroc_unsmoothed),
            format!("{:.6}", r.auroc_smoothed),
            format!("{:.6}", r.grad_norm_unsmoothed),
            format!("{:.6}", r.grad_norm_smoothed),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

/// Trains, checkpoints and writes `<out>/smoothing.csv`.
pub fn train(cfg: &CampaignConfig) -> Result<Vec<SmoothingRow>> {
    let ds = load_data(cfg)?;
    let models = train_models(cfg, &ds)?;
    fs::create_dir_all(cfg.out_dir.join("models"))?;
    for m in &models {
        m.unsmoothed.save(&cfg.model_path(m.seed, false))?;
        m.smoothed.save(&cfg.model_path(m.seed, true))?;
    }
    write_smoothing_table(&cfg.out_dir.join("smoothing.csv"), &models)
}

pub fn load_models(cfg: &CampaignConfig) -> Result<Vec<SeedModels>> {
    cfg.seeds
        .iter()
        .map(|&seed| {
            let load = |smoothed| {
                let path = cfg.model_path(seed, smoothed);
                if !path.exists() {
                    return Err(Error::Checkpoint { path, reason: "missing; run train first".into() });
                }
                TrainedPredictor::load(&path)
            };
            Ok(SeedModels { seed, unsmoothed: load(false)?, smoothed: load(true)? })
        })
        .collect()
}

/// Source items of the configured class and split that both predictors of
/// this seed classify correctly, in id order.
pub fn select_samples<'a>(cfg: &CampaignConfig, ds: &'a LabeledDataset, models: &SeedModels) -> Vec<&'a DatasetItem> {
    let source = cfg.campaign.source_label;
    let correct = |p: &TrainedPredictor, it: &DatasetItem| (p.predict_logit(&it.embedding) >= 0.0) == (source == 1);
    let mut items: Vec<&DatasetItem> = ds
        .split(cfg.campaign.split)
        .filter(|it| it.label == source && correct(&models.unsmoothed, it) && correct(&models.smoothed, it))
        .collect();
    items.sort_by_key(|it| it.id);
    if let Some(n) = cfg.campaign.max_samples {
        items.truncate(n);
    }
    items
}

/// One search for one source item. Stochastic methods draw from streams
/// keyed by seed and item id.
pub fn run_method(
    cfg: &CampaignConfig,
    method: Method,
    item: &DatasetItem,
    predictor: &TrainedPredictor,
    projector: &Projector,
    seed: u64,
) -> Result<CounterfactualResult> {
    let codebook = projector.codebook();
    match method {
        Method::Mccop => optimize(
            &item.embedding,
            predictor,
            projector,
            &cfg.mccop_config(),
            derive_seed(seed, &[domain::PROJECTION, item.id as u64]),
        ),
        Method::Gd => gd_counterfactual(&item.embedding, predictor, codebook, &cfg.gd_config()),
        Method::HillClimb => hill_climb(
            &item.sequence,
            codebook,
            predictor,
            &cfg.hill_climb_config(),
            &mut substream(seed, &[domain::HILL_CLIMB, item.id as u64]),
        ),
        Method::Ga => genetic_algorithm(
            &item.sequence,
            codebook,
            predictor,
            &cfg.ga_config(),
            &mut substream(seed, &[domain::GENETIC, item.id as u64]),
        ),
    }
}

pub(crate) fn campaign_projector(cfg: &CampaignConfig, world: &World, alpha: f64) -> Result<Projector> {
    let mut pc = cfg.mccop_config().projector_config(&cfg.projector);
    pc.alpha = alpha;
    Projector::new(world.codebook.clone(), pc, world.config.jitter())
}

/// Every configured method over every seed, ordered by method, seed and id.
pub fn run_campaign(cfg: &CampaignConfig, ds: &LabeledDataset, models: &[SeedModels]) -> Result<Vec<SampleRecord>> {
    let projector = campaign_projector(cfg, &ds.world, cfg.mccop.alpha)?;
    let pool = cfg.pool()?;
    let mut records = Vec::new();
    for method in Method::ALL.into_iter().filter(|m| cfg.methods.contains(m)) {
        for m in models {
            let items = select_samples(cfg, ds, m);
            let predictor = m.for_method(method);
            let results = pool.install(|| {
                items
                    .par_iter()
                    .map(|it| run_method(cfg, method, it, predictor, &projector, m.seed))
                    .collect::<Result<Vec<_>>>()
            })?;
            records.extend(items.iter().zip(results).map(|(it, result)| SampleRecord {
                method,
                seed: m.seed,
                id: it.id,
                result,
            }));
        }
    }
    if records.is_empty() {
        return Err(Error::Optimization("no correctly classified source sequences to run on".into()));
    }
    Ok(records)
}

pub fn records_path(cfg: &CampaignConfig) -> PathBuf {
    cfg.out_dir.join("records.json")
}

/// Runs the campaign from saved data and checkpoints and writes all reports.
pub fn run(cfg: &CampaignConfig) -> Result<Vec<SampleRecord>> {
    let ds = load_data(cfg)?;
    let models = load_models(cfg)?;
    let records = run_campaign(cfg, &ds, &models)?;
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(records_path(cfg), serde_json::to_string(&records)?)?;
    write_report(&cfg.out_dir, &records, &ds.world.codebook, cfg.campaign.slice_max)?;
    Ok(records)
}

/// Rebuilds the report files from the records of the last `run`.
pub fn report(cfg: &CampaignConfig) -> Result<()> {
    let path = records_path(cfg);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}; run the campaign first", path.display())))?;
    let records: Vec<SampleRecord> = serde_json::from_str(&text)?;
    let world = World::new(cfg.world.clone())?;
    write_report(&cfg.out_dir, &records, &world.codebook, cfg.campaign.slice_max)
}
