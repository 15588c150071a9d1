//! Config-driven pipeline: dataset generation, paired predictor training,
//! counterfactual campaigns, ablations and reports.

mod ablation;
mod config;
mod pipeline;

pub use ablation::{ablate, ablation_cells, ablation_rows, AblationCell, AblationRow, Component};
pub use config::{AblationConfig, CampaignConfig, DataConfig, RunConfig};
pub use pipeline::{
    gen_data, load_data, load_models, records_path, report, run, run_campaign, run_method, select_samples, train,
    train_models, write_smoothing_table, SeedModels, SmoothingRow,
};

#[cfg(test)]
mod tests;
