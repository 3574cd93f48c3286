use std::str::FromStr;

use crate::error::{Error, Result};

/// Which model labels the non-seed entities in the mapping-based sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassifierKind {
    /// Multinomial logistic regression.
    #[default]
    LogReg,
    /// Gradient-boosted regression trees with a softmax objective.
    Gbt,
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" => Ok(ClassifierKind::LogReg),
            "gbt" => Ok(ClassifierKind::Gbt),
            other => Err(Error::invalid(format!("unknown classifier '{other}'"))),
        }
    }
}

/// Structure-based sampling direction: which graph gets partitioned and
/// which gets classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    SourceToTarget,
    TargetToSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionerConfig {
    /// Number of mini-batches.
    pub k: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub classifier: ClassifierKind,
    pub gcn_classifier_epochs: usize,
    pub gcn_classifier_lr: f64,
    pub gcn_hidden: usize,
    /// Vertex weight of seed-aligned target entities in the guided partition.
    pub seed_vertex_weight: f64,
    pub rng_seed: u64,
}

impl Default for PartitionerConfig {
    fn default() -> Self {
        PartitionerConfig {
            k: 5,
            kmeans_max_iter: 300,
            kmeans_tol: 1e-4,
            classifier: ClassifierKind::LogReg,
            gcn_classifier_epochs: 300,
            gcn_classifier_lr: 0.01,
            gcn_hidden: 128,
            seed_vertex_weight: 100.0,
            rng_seed: 0,
        }
    }
}

impl PartitionerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("batch count must be at least 1"));
        }
        if self.kmeans_max_iter == 0 || !(self.kmeans_tol >= 0.0) {
            return Err(Error::invalid("k-means needs max_iter >= 1 and tol >= 0"));
        }
        if self.gcn_hidden == 0 || !(self.gcn_classifier_lr > 0.0) {
            return Err(Error::invalid(
                "GCN classifier needs hidden >= 1 and lr > 0",
            ));
        }
        if !(self.seed_vertex_weight >= 1.0) {
            return Err(Error::invalid("seed vertex weight must be >= 1"));
        }
        Ok(())
    }
}
