//! Local Sinkhorn-normalized similarities, global top-k similarity and the
//! sparse CSLS fusion of both.

mod csls;
mod knn;
mod local;
mod sinkhorn;

pub use csls::{csls_radii, fuse_final, sp_csls, CslsRadii};
pub use knn::{top_k_dot, topk_from_neighbors, topk_global, Neighbors};
pub use local::{assemble_local, assemble_local_batches, batch_local_sim, fuse_local};
pub use sinkhorn::{marginal_violation, sinkhorn, sinkhorn_with_trace};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    /// Sinkhorn rounds per batch (`K_s`).
    pub sinkhorn_iters: usize,
    /// Global neighbors kept per entity and direction (`K_r`).
    pub topk: usize,
    /// CSLS neighborhood size (`K_n`).
    pub csls_k: usize,
    /// Temperature of the Sinkhorn kernel `exp(sim / tau)`.
    pub tau: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            sinkhorn_iters: 100,
            topk: 50,
            csls_k: 10,
            tau: 0.05,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sinkhorn_iters == 0 || self.topk == 0 || self.csls_k == 0 {
            return Err(Error::invalid(
                "sinkhorn iterations, top-k and CSLS k must be positive",
            ));
        }
        if !(self.tau > 0.0) {
            return Err(Error::invalid("tau must be positive"));
        }
        Ok(())
    }
}
