//! Quantities derived from a fitted chain: posterior class membership,
//! dynamic survival predictions, model scores and evaluation metrics.

mod dic;
mod fitted;
mod membership;
mod metrics;
mod prediction;

pub use dic::{compute_dic, compute_dic_with, ModelScore};
pub use fitted::FittedModel;
pub use membership::{membership_log_weights, posterior_membership, write_membership, Membership};
pub use metrics::{error_rate, ipcw_auc, jumping_summary, CensoringSurvival, JumpingSummary, MAX_PERMUTED_CLASSES};
pub use prediction::{
    dynamic_survival, landmark_weights, mixture_log_survival, mixture_survival_ratio, PredictionRequest,
};
