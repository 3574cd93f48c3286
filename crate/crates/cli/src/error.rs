use crate::config::{ConfigError, Stage};

/// Failure of a pipeline run, tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("[config] {0}")]
    Config(#[from] ConfigError),
    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: kgalign_core::Error,
    },
    #[error("[{stage}] {message}")]
    Other { stage: Stage, message: String },
    #[error("[setup] {0}")]
    Setup(String),
}

impl PipelineError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { stage, .. } | PipelineError::Other { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> AtStage<T> for kgalign_core::Result<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError::Stage { stage, source })
    }
}

impl<T> AtStage<T> for std::io::Result<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::Other {
            stage,
            message: e.to_string(),
        })
    }
}
