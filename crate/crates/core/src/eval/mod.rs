//! Accuracy metrics and the dense oracles used to check the sparse pipeline.

mod csls;
mod hungarian;
mod metrics;

pub use csls::dense_csls;
pub use hungarian::{brute_force_assignment, hungarian, Assignment};
pub use metrics::{
    dense_rank_metrics, greedy_top1, hits_at_n, mrr, rank_metrics, rank_of, EvalReport, RankMetrics,
};
