//! Overlap and runtime of each sampler across batch counts.

use std::fmt::Write as _;
use std::time::Instant;

use kgalign_core::sampler::overlap;
use kgalign_core::PartitionerConfig;

use crate::config::{PipelineConfig, Stage};
use crate::error::{AtStage, PipelineError};
use crate::pipeline::{compute_assignment, run_through, Artifacts};

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub sampler: String,
    pub k: usize,
    pub overlap: f64,
    pub seconds: f64,
}

/// Samplers in the study, paired with the assignment each one produces.
/// ISCS runs in the source-to-target direction.
pub const STUDY_SAMPLERS: [(&str, &str); 4] = [
    ("vps", "vps"),
    ("metis-cps", "metis_cps"),
    ("cmcs", "cmcs"),
    ("iscs", "iscs_st"),
];

/// Train (or resume) up to the embeddings, then time every sampler at every
/// `k`. Overlap is measured against the whole alignment. Writes `study.csv`
/// to the output directory.
pub fn run_sampler_study(
    cfg: &PipelineConfig,
    ks: &[usize],
) -> Result<Vec<StudyRow>, PipelineError> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(PipelineError::Setup("k values must be positive".into()));
    }
    let (state, _) = run_through(cfg, Stage::Train)?;
    let truth = state.truth();
    let adj = state.adjacencies();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_threads().unwrap_or(0))
        .build()
        .map_err(|e| PipelineError::Setup(e.to_string()))?;
    let rows = pool.install(|| -> Result<Vec<StudyRow>, PipelineError> {
        let mut rows = Vec::new();
        for &k in ks {
            let pc = PartitionerConfig {
                k,
                ..cfg.partition.clone()
            };
            for (sampler, output) in STUDY_SAMPLERS {
                let t = Instant::now();
                let (a, _) = compute_assignment(output, &state, &adj, &pc)?;
                let seconds = t.elapsed().as_secs_f64();
                rows.push(StudyRow {
                    sampler: sampler.to_owned(),
                    k,
                    overlap: overlap(&a, &truth),
                    seconds,
                });
            }
        }
        Ok(rows)
    })?;
    let path = Artifacts::new(&cfg.output).root.join("study.csv");
    std::fs::write(&path, to_csv(&rows)).at(Stage::Sample)?;
    Ok(rows)
}

pub fn to_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("sampler,k,overlap,seconds\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.4}",
            r.sampler, r.k, r.overlap, r.seconds
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_one_line_per_row() {
        let rows = vec![
            StudyRow {
                sampler: "vps".into(),
                k: 5,
                overlap: 0.44,
                seconds: 0.01,
            },
            StudyRow {
                sampler: "cmcs".into(),
                k: 5,
                overlap: 0.75,
                seconds: 0.3,
            },
        ];
        let csv = to_csv(&rows);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "sampler,k,overlap,seconds");
        assert_eq!(lines[1], "vps,5,0.440000,0.0100");
        assert_eq!(lines.len(), 3);
    }
}
