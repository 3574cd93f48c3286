//! Orchestration around `kgalign-core`: configuration, the staged pipeline
//! with on-disk artifacts, and the sampler study.

pub mod alloc;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod study;

pub use config::{DataSource, PipelineConfig, SamplerChoice, Stage};
pub use error::PipelineError;
pub use pipeline::{run_pipeline, run_through, Artifacts};
pub use study::{run_sampler_study, StudyRow};
