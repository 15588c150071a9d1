//! Metrics over campaign results and the CSV reports built from them.

mod metrics;
mod properties;
mod report;

pub use metrics::{campaign_metrics, hamming, merge_seeds, CampaignMetrics, Method, MethodSummary, SampleRecord};
pub use properties::{
    gravy, hydropathy, manifold_distance, mutation_frequencies, rediscovery_check, slice_by_edit_distance,
    timing_profile, MutationCount, Rediscovery, SliceRow, TimingRow,
};
pub use report::{
    write_campaign_csv, write_counterfactuals, write_mutfreq_csv, write_report, write_slice_csv, write_summary_csv,
    write_timing_csv, SUMMARY_HEADER,
};
