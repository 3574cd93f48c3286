//! Mini-batch samplers: every entity of both graphs gets one batch label.

mod assignment;
mod baselines;
mod classifier;
mod cmcs;
mod config;
mod iscs;
mod kmeans;
mod metis;

pub use assignment::{overlap, BatchAssignment};
pub use baselines::{metis_cps, vps, vps_expected_overlap};
pub use classifier::{train_classifier, Classifier, GradientBoosting, LogisticRegression};
pub use cmcs::cmcs;
pub use config::{ClassifierKind, Direction, PartitionerConfig};
pub use iscs::{gcn_node_classifier, iscs, IscsOutcome};
pub use kmeans::{kmeans, KMeans};
pub use metis::{edge_cut, metis_partition, metis_partition_with, MetisOptions};
