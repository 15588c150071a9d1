use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ablation::Component;
use crate::baselines::{GaConfig, GdConfig, HillClimbConfig};
use crate::error::{Error, Result};
use crate::evaluation::Method;
use crate::latentworld::{Binarization, Split, WorldConfig};
use crate::optimizer::MccopConfig;
use crate::predictor::{SmoothingConfig, TrainHyperparams};
use crate::projector::ProjectorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub size: usize,
    pub binarization: Binarization,
    pub seed: u64,
    /// Also write the binary embedding cache next to the records.
    pub embedding_cache: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { size: 1250, binarization: Binarization::Otsu, seed: 0, embedding_cache: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Class the source sequences come from; counterfactuals target the other.
    pub source_label: u8,
    pub split: Split,
    /// Cap on source sequences per seed, taken in id order.
    pub max_samples: Option<usize>,
    /// Edit-distance slices are written for 1..=slice_max.
    pub slice_max: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { source_label: 0, split: Split::Test, max_samples: None, slice_max: 5 }
    }
}

impl RunConfig {
    /// Signed target label for the optimizers.
    pub fn target(&self) -> i8 {
        if self.source_label == 0 {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    /// Smoothing mechanisms toggled on and off; the rest keep `[smoothing]`.
    pub components: Vec<Component>,
    pub projection: Vec<bool>,
    /// Mask sizes; 0 disables masking (every position editable).
    pub k_values: Vec<usize>,
    /// Refuse grids with more cells than this.
    pub max_cells: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            components: Component::ALL.to_vec(),
            projection: vec![true, false],
            k_values: vec![0, 5],
            max_cells: 64,
        }
    }
}

/// Everything a pipeline run needs. Every section has defaults, so an empty
/// file is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub data: DataConfig,
    pub world: WorldConfig,
    pub smoothing: SmoothingConfig,
    pub train: TrainHyperparams,
    /// Noise schedule and prior width. The projection strength and noise
    /// level used by campaigns come from `[mccop]`.
    pub projector: ProjectorConfig,
    pub mccop: MccopConfig,
    pub gd: GdConfig,
    pub hill_climb: HillClimbConfig,
    pub ga: GaConfig,
    pub campaign: RunConfig,
    pub ablation: AblationConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            out_dir: PathBuf::from("out"),
            seeds: vec![0, 1, 2],
            methods: Method::ALL.to_vec(),
            jobs: 0,
            data: DataConfig::default(),
            world: WorldConfig::default(),
            smoothing: SmoothingConfig::all_on(),
            train: TrainHyperparams::default(),
            projector: ProjectorConfig::default(),
            mccop: MccopConfig::default(),
            gd: GdConfig::default(),
            hill_climb: HillClimbConfig::default(),
            ga: GaConfig::default(),
            campaign: RunConfig::default(),
            ablation: AblationConfig::default(),
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: CampaignConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("at least one method is required"));
        }
        if self.campaign.source_label > 1 {
            return Err(Error::config("source_label must be 0 or 1"));
        }
        self.world.validate()?;
        self.smoothing.validate()?;
        self.train.validate()?;
        self.projector.validate()?;
        self.mccop_config().validate()?;
        self.gd_config().validate()?;
        self.hill_climb_config().validate()?;
        self.ga_config().validate()?;
        Ok(())
    }

    pub fn mccop_config(&self) -> MccopConfig {
        MccopConfig { target: self.campaign.target(), ..self.mccop.clone() }
    }

    pub fn gd_config(&self) -> GdConfig {
        GdConfig { target: self.campaign.target(), ..self.gd.clone() }
    }

    pub fn hill_climb_config(&self) -> HillClimbConfig {
        HillClimbConfig { target: self.campaign.target(), ..self.hill_climb.clone() }
    }

    pub fn ga_config(&self) -> GaConfig {
        GaConfig { target: self.campaign.target(), ..self.ga.clone() }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.out_dir.join("data")
    }

    pub fn model_path(&self, seed: u64, smoothed: bool) -> PathBuf {
        let kind = if smoothed { "smoothed" } else { "unsmoothed" };
        self.out_dir.join("models").join(format!("seed{seed}_{kind}.bin"))
    }

    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))
    }
}
