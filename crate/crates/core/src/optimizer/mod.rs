//! The masked, projected counterfactual search.

mod mccop;
mod result;

pub use mccop::{
    cf_loss, cf_loss_gradient, margin_loss, mccop_step, optimize, optimize_observed, position_sensitivity, topk_mask,
    MccopConfig, StepTrace,
};
pub(crate) use result::differing;
pub use result::{CounterfactualResult, PhaseTimes};
