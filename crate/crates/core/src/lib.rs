//! Entity alignment between two knowledge graphs.
//!
//! The pipeline has three stages:
//!
//! 1. [`embed`] trains a Siamese GCN encoder over both graphs with
//!    neighborhood-sampled mini-batches and the normalized hard sample
//!    mining loss, producing one embedding per entity.
//! 2. [`sampler`] splits both graphs into `K` mini-batches so that aligned
//!    entities tend to land in the same batch (CMCS and ISCS, plus the VPS
//!    and METIS-CPS baselines).
//! 3. [`fusion`] Sinkhorn-normalizes each batch's local similarity, sums the
//!    batches from every sampler, and fuses the result with a sparse
//!    CSLS-normalized global top-k similarity.
//!
//! [`eval`] holds the accuracy metrics and the dense oracles (Hungarian,
//! dense CSLS) used to check the sparse machinery.

pub mod embed;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod kg;
pub mod real;
pub mod sampler;
pub mod sparse;
pub mod synthetic;
pub mod tensor;

pub use embed::{EmbeddingMatrix, TrainConfig};
pub use error::{Error, Result};
pub use eval::EvalReport;
pub use fusion::FusionConfig;
pub use kg::{AlignmentRole, AlignmentSet, KnowledgeGraph, Triple, WeightedAdjacency};
pub use real::Real;
pub use sampler::{BatchAssignment, PartitionerConfig};
pub use sparse::SparseSimMatrix;
pub use synthetic::{generate_synthetic, SyntheticPair, SyntheticSpec};

/// Deterministic generator used everywhere a seed is accepted.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Build the crate's generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
