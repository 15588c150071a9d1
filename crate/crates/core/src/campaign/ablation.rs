use std::collections::HashMap;
use std::fs;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::CampaignConfig;
use super::pipeline::{campaign_projector, load_data, load_models, select_samples, SeedModels};
use crate::baselines::gd_counterfactual;
use crate::error::{Error, Result};
use crate::evaluation::{merge_seeds, Method, MethodSummary, SampleRecord, SUMMARY_HEADER};
use crate::latentworld::LabeledDataset;
use crate::optimizer::{optimize, MccopConfig};
use crate::predictor::{train_predictor, SmoothingConfig, TrainedPredictor};
use crate::rng::{derive_seed, domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    SpectralNorm,
    Jacobian,
    Fgsm,
    Softplus,
}

impl Component {
    pub const ALL: [Component; 4] =
        [Component::SpectralNorm, Component::Jacobian, Component::Fgsm, Component::Softplus];

    fn set(self, sm: &mut SmoothingConfig, on: bool) {
        let src = if on { SmoothingConfig::all_on() } else { SmoothingConfig::none() };
        match self {
            Component::SpectralNorm => sm.spectral_norm = src.spectral_norm,
            Component::Jacobian => sm.jacobian_lambda = src.jacobian_lambda,
            Component::Fgsm => sm.fgsm_augment = src.fgsm_augment,
            Component::Softplus => sm.softplus = src.softplus,
        }
    }
}

/// One point of the ablation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationCell {
    pub smoothing: SmoothingConfig,
    pub projection: bool,
    /// 0 means no masking.
    pub k: usize,
}

impl AblationCell {
    /// No smoothing, no masking and no projection: plain gradient descent.
    pub fn is_all_off(&self) -> bool {
        !self.projection && self.k == 0 && self.smoothing.tag() == "none"
    }
}

pub fn ablation_cells(cfg: &CampaignConfig) -> Result<Vec<AblationCell>> {
    let a = &cfg.ablation;
    let n = (1usize << a.components.len()) * a.projection.len() * a.k_values.len();
    if n == 0 {
        return Err(Error::config("ablation grid is empty"));
    }
    if n > a.max_cells {
        return Err(Error::config(format!("ablation grid has {n} cells, above the budget of {}", a.max_cells)));
    }
    let mut cells = Vec::with_capacity(n);
    for bits in 0..1usize << a.components.len() {
        let mut sm = cfg.smoothing.clone();
        for (i, c) in a.components.iter().enumerate() {
            c.set(&mut sm, bits & (1 << i) != 0);
        }
        for &projection in &a.projection {
            for &k in &a.k_values {
                cells.push(AblationCell { smoothing: sm.clone(), projection, k });
            }
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub cell: AblationCell,
    pub summary: MethodSummary,
}

fn predictor_for<'a>(
    sm: &SmoothingConfig,
    m: &'a SeedModels,
    extra: &'a HashMap<(String, u64), TrainedPredictor>,
) -> &'a TrainedPredictor {
    if sm.tag() == "none" {
        &m.unsmoothed
    } else if sm == m.smoothed.smoothing() {
        &m.smoothed
    } else {
        &extra[&(sm.tag(), m.seed)]
    }
}

fn run_cell(
    cfg: &CampaignConfig,
    ds: &LabeledDataset,
    models: &[SeedModels],
    extra: &HashMap<(String, u64), TrainedPredictor>,
    cell: &AblationCell,
    pool: &rayon::ThreadPool,
) -> Result<Vec<SampleRecord>> {
    let alpha = if cell.projection { cfg.mccop.alpha } else { 0.0 };
    let projector = campaign_projector(cfg, &ds.world, alpha)?;
    let rows = ds.world.config.length;
    let mcfg = MccopConfig { k: if cell.k == 0 { rows } else { cell.k }, alpha, ..cfg.mccop_config() };
    let method = if cell.is_all_off() { Method::Gd } else { Method::Mccop };
    let mut out = Vec::new();
    for m in models {
        let items = select_samples(cfg, ds, m);
        let predictor = predictor_for(&cell.smoothing, m, extra);
        let results = pool.install(|| {
            items
                .par_iter()
                .map(|it| match method {
                    Method::Gd => gd_counterfactual(&it.embedding, predictor, projector.codebook(), &cfg.gd_config()),
                    _ => optimize(
                        &it.embedding,
                        predictor,
                        &projector,
                        &mcfg,
                        derive_seed(m.seed, &[domain::PROJECTION, it.id as u64]),
                    ),
                })
                .collect::<Result<Vec<_>>>()
        })?;
        out.extend(items.iter().zip(results).map(|(it, result)| SampleRecord {
            method,
            seed: m.seed,
            id: it.id,
            result,
        }));
    }
    Ok(out)
}

/// Runs the grid in memory. Predictors for smoothing combinations other
/// than the two in `models` are trained on the fly.
pub fn ablation_rows(cfg: &CampaignConfig, ds: &LabeledDataset, models: &[SeedModels]) -> Result<Vec<AblationRow>> {
    let cells = ablation_cells(cfg)?;
    let pool = cfg.pool()?;
    let mut needed: Vec<(SmoothingConfig, u64)> = Vec::new();
    for c in &cells {
        for m in models {
            let known = c.smoothing.tag() == "none" || &c.smoothing == m.smoothed.smoothing();
            if !known && !needed.iter().any(|(s, seed)| s.tag() == c.smoothing.tag() && *seed == m.seed) {
                needed.push((c.smoothing.clone(), m.seed));
            }
        }
    }
    let trained = pool.install(|| {
        needed
            .par_iter()
            .map(|(sm, seed)| train_predictor(ds, sm, &cfg.train, *seed).map(|p| ((sm.tag(), *seed), p)))
            .collect::<Result<Vec<_>>>()
    })?;
    let extra: HashMap<_, _> = trained.into_iter().collect();
    cells
        .into_iter()
        .map(|cell| {
            let records = run_cell(cfg, ds, models, &extra, &cell, &pool)?;
            let summary = merge_seeds(&records)?.remove(0);
            Ok(AblationRow { cell, summary })
        })
        .collect()
}

/// Runs the grid from saved data and checkpoints, writing `ablation.csv`.
pub fn ablate(cfg: &CampaignConfig) -> Result<Vec<AblationRow>> {
    let ds = load_data(cfg)?;
    let models = load_models(cfg)?;
    let rows = ablation_rows(cfg, &ds, &models)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let mut w = csv::Writer::from_path(cfg.out_dir.join("ablation.csv"))?;
    let mut header = vec!["spectral_norm", "jacobian", "fgsm", "softplus", "projection", "k"];
    header.extend(SUMMARY_HEADER);
    header.push("success_nondecreasing_in_k");
    w.write_record(&header)?;
    for r in &rows {
        let sm = &r.cell.smoothing;
        // Success rate trend over k within the same smoothing and projection.
        let mut group: Vec<&AblationRow> =
            rows.iter().filter(|o| o.cell.smoothing == *sm && o.cell.projection == r.cell.projection).collect();
        let eff = |k: usize| if k == 0 { usize::MAX } else { k };
        group.sort_by_key(|o| eff(o.cell.k));
        let monotone = group.windows(2).all(|p| p[1].summary.success_rate.0 >= p[0].summary.success_rate.0);
        let mut rec = vec![
            sm.spectral_norm.to_string(),
            sm.jacobian_on().to_string(),
            sm.fgsm_augment.to_string(),
            sm.softplus.to_string(),
            r.cell.projection.to_string(),
            r.cell.k.to_string(),
            r.summary.method.name().to_string(),
        ];
        rec.extend(r.summary.metric_fields());
        rec.push(monotone.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(rows)
}
