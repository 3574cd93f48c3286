//! The staged pipeline. Each stage persists its outputs under the output
//! directory before the next one starts, so a run can resume from any stage
//! by reading the earlier artifacts back.
//!
//! Output layout:
//!
//! ```text
//! data/{source,target}_triples.tsv, data/{source,target}_entities.txt
//! data/seed_links.tsv, data/test_links.tsv
//! embeddings.bin, embeddings.ids.tsv
//! assignments/<sampler>.{source,target}.tsv, assignments/notes.tsv
//! m_l.bin, m_f.tsv, m_f.bin
//! report.txt, report.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kgalign_core::embed::{read_embeddings, train_embeddings, write_embeddings};
use kgalign_core::eval::{dense_rank_metrics, rank_metrics};
use kgalign_core::fusion::{assemble_local, fuse_final, top_k_dot, topk_from_neighbors, CslsRadii};
use kgalign_core::kg::{
    load_alignment, load_kg, load_kg_with_entities, split_seed, write_alignment, write_entity_list,
    write_kg,
};
use kgalign_core::sampler::{cmcs, iscs, metis_cps, overlap, vps, Direction};
use kgalign_core::{
    generate_synthetic, seeded_rng, AlignmentRole, AlignmentSet, BatchAssignment, EmbeddingMatrix,
    EvalReport, KnowledgeGraph, PartitionerConfig, SparseSimMatrix, WeightedAdjacency,
};

use crate::config::{DataSource, PipelineConfig, SamplerChoice, Stage};
use crate::error::{AtStage, PipelineError};

type Result<T> = std::result::Result<T, PipelineError>;

/// Paths of every artifact under one output directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub root: PathBuf,
}

impl Artifacts {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Artifacts { root: root.into() }
    }

    pub fn data(&self, file: &str) -> PathBuf {
        self.root.join("data").join(file)
    }

    pub fn embeddings(&self) -> PathBuf {
        self.root.join("embeddings.bin")
    }

    pub fn embedding_ids(&self) -> PathBuf {
        self.root.join("embeddings.ids.tsv")
    }

    pub fn assignment(&self, sampler: &str, side: &str) -> PathBuf {
        self.root
            .join("assignments")
            .join(format!("{sampler}.{side}.tsv"))
    }

    /// Sampler diagnostics as `name<TAB>value` lines.
    pub fn sampler_notes(&self) -> PathBuf {
        self.root.join("assignments").join("notes.tsv")
    }

    pub fn m_l(&self) -> PathBuf {
        self.root.join("m_l.bin")
    }

    pub fn m_f_text(&self) -> PathBuf {
        self.root.join("m_f.tsv")
    }

    pub fn m_f(&self) -> PathBuf {
        self.root.join("m_f.bin")
    }

    pub fn report_text(&self) -> PathBuf {
        self.root.join("report.txt")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }
}

/// In-memory products of the stages run so far.
pub struct RunState {
    pub source: KnowledgeGraph,
    pub target: KnowledgeGraph,
    pub seed: AlignmentSet,
    pub test: AlignmentSet,
    /// Unit-length rows.
    pub embeddings: Option<EmbeddingMatrix>,
    pub assignments: Vec<(String, BatchAssignment)>,
    pub m_f: Option<SparseSimMatrix>,
    /// Diagnostics copied into the report's extra metrics.
    pub notes: BTreeMap<String, f64>,
}

impl RunState {
    /// Seed and test pairs together.
    pub fn truth(&self) -> AlignmentSet {
        self.seed
            .union(&self.test)
            .expect("seed and test are disjoint halves of one alignment")
    }

    pub fn adjacencies(&self) -> (WeightedAdjacency, WeightedAdjacency) {
        (
            WeightedAdjacency::build(&self.source),
            WeightedAdjacency::build(&self.target),
        )
    }

    fn embeddings(&self, stage: Stage) -> Result<&EmbeddingMatrix> {
        self.embeddings
            .as_ref()
            .ok_or_else(|| PipelineError::Other {
                stage,
                message: "no embeddings".into(),
            })
    }
}

/// Run every stage and return the evaluation report.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<EvalReport> {
    Ok(run_through(cfg, Stage::Eval)?.1)
}

/// Run stages from `cfg.resume_from` (or the beginning) up to and including
/// `last`. Stages before the starting one are loaded from disk. The report
/// carries accuracy metrics only when `last` is [`Stage::Eval`].
pub fn run_through(cfg: &PipelineConfig, last: Stage) -> Result<(RunState, EvalReport)> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_threads().unwrap_or(0))
        .build()
        .map_err(|e| PipelineError::Setup(e.to_string()))?;
    pool.install(|| run_in_pool(cfg, last))
}

fn run_in_pool(cfg: &PipelineConfig, last: Stage) -> Result<(RunState, EvalReport)> {
    crate::alloc::reset_peak();
    // resuming past `last` just loads everything up to it
    let first = cfg.resume_from.unwrap_or(Stage::Data);
    let art = Artifacts::new(&cfg.output);
    fs::create_dir_all(&art.root).at(Stage::Data)?;
    let mut report = EvalReport::default();
    let timed = |stage: Stage, report: &mut EvalReport, f: &mut dyn FnMut() -> Result<()>| {
        let t = Instant::now();
        let r = f();
        report
            .stage_seconds
            .push((stage.name().to_owned(), t.elapsed().as_secs_f64()));
        r
    };

    let mut state = None;
    timed(Stage::Data, &mut report, &mut || {
        state = Some(if first > Stage::Data {
            load_data(&art)?
        } else {
            make_data(cfg, &art)?
        });
        Ok(())
    })?;
    let mut state = state.expect("data stage sets the state");
    let mut scored = EvalReport::default();

    for stage in [Stage::Train, Stage::Sample, Stage::Fuse, Stage::Eval] {
        if stage > last {
            break;
        }
        let run = stage >= first;
        timed(stage, &mut report, &mut || match (stage, run) {
            (Stage::Train, true) => train(cfg, &art, &mut state),
            (Stage::Train, false) => {
                let emb = read_embeddings(art.embeddings()).at(Stage::Train)?;
                state.embeddings = Some(emb.l2_normalized());
                Ok(())
            }
            (Stage::Sample, true) => sample(cfg, &art, &mut state),
            (Stage::Sample, false) => load_assignments(cfg, &art, &mut state),
            (Stage::Fuse, true) => fuse(cfg, &art, &mut state),
            (Stage::Fuse, false) => {
                state.m_f = Some(SparseSimMatrix::read_binary(art.m_f()).at(Stage::Fuse)?);
                Ok(())
            }
            (Stage::Eval, _) => evaluate(cfg, &state, &mut scored),
            (Stage::Data, _) => unreachable!(),
        })?;
    }

    report.hits = scored.hits;
    report.mrr = scored.mrr;
    report.extra = scored.extra;
    let truth = state.truth();
    for (name, a) in &state.assignments {
        report.overlaps.push((name.clone(), overlap(a, &truth)));
    }
    report.extra.extend(state.notes.clone());
    report.peak_memory_bytes = crate::alloc::peak_bytes();
    if last == Stage::Eval {
        fs::write(art.report_text(), report.to_key_values()).at(Stage::Eval)?;
        let json = serde_json::to_string_pretty(&report).map_err(|e| PipelineError::Other {
            stage: Stage::Eval,
            message: e.to_string(),
        })?;
        fs::write(art.report_json(), json).at(Stage::Eval)?;
    }
    Ok((state, report))
}

fn make_data(cfg: &PipelineConfig, art: &Artifacts) -> Result<RunState> {
    let st = Stage::Data;
    let (source, target, truth) = match &cfg.data {
        DataSource::Synthetic(spec) => {
            let pair = generate_synthetic(spec).at(st)?;
            (pair.source, pair.target, pair.alignment)
        }
        DataSource::Files {
            source,
            target,
            links,
            source_entities,
            target_entities,
        } => {
            let load = |triples: &Path, ents: &Option<PathBuf>| match ents {
                Some(e) => load_kg_with_entities(triples, e),
                None => load_kg(triples),
            };
            let kg_s = load(source, source_entities).at(st)?;
            let kg_t = load(target, target_entities).at(st)?;
            let links = load_alignment(links, &kg_s, &kg_t).at(st)?;
            (kg_s, kg_t, links)
        }
    };
    let (seed, test) = split_seed(&truth, cfg.train_ratio, cfg.split_seed).at(st)?;
    fs::create_dir_all(art.root.join("data")).at(st)?;
    write_kg(&source, art.data("source_triples.tsv")).at(st)?;
    write_kg(&target, art.data("target_triples.tsv")).at(st)?;
    write_entity_list(&source, art.data("source_entities.txt")).at(st)?;
    write_entity_list(&target, art.data("target_entities.txt")).at(st)?;
    write_alignment(&seed, &source, &target, art.data("seed_links.tsv")).at(st)?;
    write_alignment(&test, &source, &target, art.data("test_links.tsv")).at(st)?;
    Ok(RunState {
        source,
        target,
        seed,
        test,
        embeddings: None,
        assignments: Vec::new(),
        m_f: None,
        notes: BTreeMap::new(),
    })
}

fn load_data(art: &Artifacts) -> Result<RunState> {
    let st = Stage::Data;
    let source = load_kg_with_entities(
        art.data("source_triples.tsv"),
        art.data("source_entities.txt"),
    )
    .at(st)?;
    let target = load_kg_with_entities(
        art.data("target_triples.tsv"),
        art.data("target_entities.txt"),
    )
    .at(st)?;
    let links = |file: &str, role| {
        let a = load_alignment(art.data(file), &source, &target)?;
        AlignmentSet::new(a.pairs().to_vec(), role)
    };
    let seed = links("seed_links.tsv", AlignmentRole::Seed).at(st)?;
    let test = links("test_links.tsv", AlignmentRole::Test).at(st)?;
    Ok(RunState {
        source,
        target,
        seed,
        test,
        embeddings: None,
        assignments: Vec::new(),
        m_f: None,
        notes: BTreeMap::new(),
    })
}

fn train(cfg: &PipelineConfig, art: &Artifacts, state: &mut RunState) -> Result<()> {
    let st = Stage::Train;
    let emb = train_embeddings(&state.source, &state.target, &state.seed, &cfg.train).at(st)?;
    write_embeddings(&emb, art.embeddings()).at(st)?;
    let mut ids = std::io::BufWriter::new(fs::File::create(art.embedding_ids()).at(st)?);
    for (row, label) in state.source.entity_labels().iter().enumerate() {
        writeln!(ids, "{row}\tsource\t{label}").at(st)?;
    }
    let n_s = state.source.num_entities();
    for (i, label) in state.target.entity_labels().iter().enumerate() {
        writeln!(ids, "{}\ttarget\t{label}", n_s + i).at(st)?;
    }
    ids.flush().at(st)?;
    state.embeddings = Some(emb.l2_normalized());
    Ok(())
}

/// Assignment names the configured sampler produces, in fusion order.
pub fn sampler_outputs(choice: SamplerChoice) -> &'static [&'static str] {
    match choice {
        SamplerChoice::Full => &["cmcs", "iscs_st", "iscs_ts"],
        SamplerChoice::CmcsOnly => &["cmcs"],
        SamplerChoice::Iscs => &["iscs_st", "iscs_ts"],
        SamplerChoice::Vps => &["vps"],
        SamplerChoice::MetisCps => &["metis_cps"],
    }
}

/// Compute one named assignment. Returns the assignment and, for ISCS, the
/// node classifier's training accuracy.
pub fn compute_assignment(
    name: &str,
    state: &RunState,
    adj: &(WeightedAdjacency, WeightedAdjacency),
    pc: &PartitionerConfig,
) -> Result<(BatchAssignment, Option<f64>)> {
    let st = Stage::Sample;
    let emb = state.embeddings(st)?;
    let (adj_s, adj_t) = adj;
    let iscs_dir = |d| -> Result<(BatchAssignment, Option<f64>)> {
        let out = iscs(adj_s, adj_t, emb, &state.seed, pc, d).at(st)?;
        Ok((out.assignment, Some(out.train_accuracy)))
    };
    match name {
        "cmcs" => Ok((cmcs(emb, &state.seed, pc).at(st)?, None)),
        "iscs_st" => iscs_dir(Direction::SourceToTarget),
        "iscs_ts" => iscs_dir(Direction::TargetToSource),
        "vps" => {
            let mut rng = seeded_rng(pc.rng_seed);
            let a = vps(&state.seed, emb.n_source(), emb.n_target(), pc.k, &mut rng).at(st)?;
            Ok((a, None))
        }
        "metis_cps" => Ok((metis_cps(adj_s, adj_t, &state.seed, pc).at(st)?, None)),
        other => Err(PipelineError::Other {
            stage: st,
            message: format!("unknown sampler output {other:?}"),
        }),
    }
}

fn sample(cfg: &PipelineConfig, art: &Artifacts, state: &mut RunState) -> Result<()> {
    let st = Stage::Sample;
    fs::create_dir_all(art.root.join("assignments")).at(st)?;
    let adj = state.adjacencies();
    state.assignments.clear();
    for &name in sampler_outputs(cfg.sampler) {
        let (a, acc) = compute_assignment(name, state, &adj, &cfg.partition)?;
        if let Some(acc) = acc {
            state.notes.insert(format!("{name}.train_accuracy"), acc);
        }
        BatchAssignment::write_side(a.source_labels(), art.assignment(name, "source")).at(st)?;
        BatchAssignment::write_side(a.target_labels(), art.assignment(name, "target")).at(st)?;
        state.assignments.push((name.to_owned(), a));
    }
    let notes: String = state
        .notes
        .iter()
        .map(|(k, v)| format!("{k}\t{v}\n"))
        .collect();
    fs::write(art.sampler_notes(), notes).at(st)?;
    Ok(())
}

fn load_assignments(cfg: &PipelineConfig, art: &Artifacts, state: &mut RunState) -> Result<()> {
    let st = Stage::Sample;
    state.assignments.clear();
    for &name in sampler_outputs(cfg.sampler) {
        let s = BatchAssignment::read_side(art.assignment(name, "source")).at(st)?;
        let t = BatchAssignment::read_side(art.assignment(name, "target")).at(st)?;
        let k = s.iter().chain(&t).max().map_or(1, |m| m + 1);
        let a = BatchAssignment::new(k.max(cfg.partition.k), s, t).at(st)?;
        state.assignments.push((name.to_owned(), a));
    }
    let notes = fs::read_to_string(art.sampler_notes()).at(st)?;
    for line in notes.lines() {
        let parsed = line
            .split_once('\t')
            .and_then(|(k, v)| Some((k.to_owned(), v.parse::<f64>().ok()?)));
        let (k, v) = parsed.ok_or_else(|| PipelineError::Other {
            stage: st,
            message: format!("bad line {line:?} in {}", art.sampler_notes().display()),
        })?;
        state.notes.insert(k, v);
    }
    Ok(())
}

/// Local similarity of one assignment in source-by-target orientation. The
/// target-to-source structural matrix is normalized from the target side and
/// transposed back.
pub fn local_matrix(
    name: &str,
    assignment: &BatchAssignment,
    emb: &EmbeddingMatrix,
    cfg: &kgalign_core::FusionConfig,
) -> kgalign_core::Result<SparseSimMatrix> {
    if name == "iscs_ts" {
        Ok(assemble_local(&assignment.swapped(), &emb.swapped(), cfg)?.transpose())
    } else {
        assemble_local(assignment, emb, cfg)
    }
}

fn fuse(cfg: &PipelineConfig, art: &Artifacts, state: &mut RunState) -> Result<()> {
    let st = Stage::Fuse;
    let emb = state.embeddings(st)?;
    let fc = &cfg.fusion;
    let mut m_l: Option<SparseSimMatrix> = None;
    for (name, a) in &state.assignments {
        let m = local_matrix(name, a, emb, fc).at(st)?;
        m_l = Some(match m_l {
            None => m,
            Some(acc) => acc.add(&m).at(st)?,
        });
    }
    let m_l = m_l.unwrap_or_else(|| SparseSimMatrix::empty(emb.n_source(), emb.n_target()));
    m_l.write_binary(art.m_l()).at(st)?;
    let k = fc.topk.max(fc.csls_k);
    let nn_st = top_k_dot(emb.source(), emb.target(), k);
    let nn_ts = top_k_dot(emb.target(), emb.source(), k);
    let m_g = topk_from_neighbors(&nn_st, &nn_ts, fc.topk).at(st)?;
    let radii = CslsRadii::from_neighbors(&nn_st, &nn_ts, fc.csls_k);
    let m_f = fuse_final(&m_l, &m_g, &radii).at(st)?;
    m_f.write_text(art.m_f_text()).at(st)?;
    m_f.write_binary(art.m_f()).at(st)?;
    state.m_f = Some(m_f);
    Ok(())
}

fn evaluate(cfg: &PipelineConfig, state: &RunState, report: &mut EvalReport) -> Result<()> {
    let st = Stage::Eval;
    let m_f = state.m_f.as_ref().ok_or_else(|| PipelineError::Other {
        stage: st,
        message: "no fused matrix".into(),
    })?;
    let r = rank_metrics(m_f, &state.test, &cfg.hits);
    report.hits = r.hits;
    report.mrr = r.mrr;
    let emb = state.embeddings(st)?;
    let g = dense_rank_metrics(emb.source(), emb.target(), &state.test, &cfg.hits);
    for (n, v) in g.hits {
        report.extra.insert(format!("greedy.hits@{n}"), v);
    }
    report.extra.insert("greedy.mrr".into(), g.mrr);
    report
        .extra
        .insert("test_pairs".into(), state.test.len() as f64);
    Ok(())
}

/// Write a synthetic dataset in the input file format: `rel_triples_1`,
/// `rel_triples_2`, `ent_links`, plus entity lists `ent_list_1` and
/// `ent_list_2` so isolated entities survive a reload.
pub fn write_synthetic_dataset(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let st = Stage::Data;
    let DataSource::Synthetic(spec) = &cfg.data else {
        return Err(PipelineError::Other {
            stage: st,
            message: "synth needs a synthetic data source, not dataset files".into(),
        });
    };
    let pair = generate_synthetic(spec).at(st)?;
    fs::create_dir_all(&cfg.output).at(st)?;
    let path = |f: &str| cfg.output.join(f);
    write_kg(&pair.source, path("rel_triples_1")).at(st)?;
    write_kg(&pair.target, path("rel_triples_2")).at(st)?;
    write_alignment(
        &pair.alignment,
        &pair.source,
        &pair.target,
        path("ent_links"),
    )
    .at(st)?;
    write_entity_list(&pair.source, path("ent_list_1")).at(st)?;
    write_entity_list(&pair.target, path("ent_list_2")).at(st)?;
    Ok([
        "rel_triples_1",
        "rel_triples_2",
        "ent_links",
        "ent_list_1",
        "ent_list_2",
    ]
    .map(path)
    .to_vec())
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use kgalign_core::embed::read_embeddings;
    use kgalign_core::FusionConfig;

    use super::*;
    use crate::run_sampler_study;

    fn config(out: &Path, extra: &[(&str, &str)]) -> PipelineConfig {
        let o = out.to_string_lossy().into_owned();
        let mut pairs = vec![("output", o.as_str()), ("deterministic", "true")];
        pairs.extend_from_slice(extra);
        PipelineConfig::from_pairs(pairs).unwrap()
    }

    const SMALL: [(&str, &str); 2] = [("entities", "300"), ("epochs", "15")];

    #[test]
    fn twin_graphs_align_with_default_settings() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(
            dir.path(),
            &[("entities", "500"), ("dropout", "0"), ("remap", "0")],
        );
        let r = run_pipeline(&cfg).unwrap();
        assert!(r.hits[&1] >= 0.9, "hits@1 {}", r.hits[&1]);
        assert!(r.hits[&1] <= r.hits[&10] && r.hits[&10] <= 1.0);
        assert!(r.mrr >= r.hits[&1] && r.mrr <= 1.0);
        let stages: Vec<_> = r.stage_seconds.iter().map(|(s, _)| s.as_str()).collect();
        assert_eq!(stages, ["data", "train", "sample", "fuse", "eval"]);
        let names: Vec<_> = r.overlaps.iter().map(|(s, _)| s.as_str()).collect();
        assert_eq!(names, ["cmcs", "iscs_st", "iscs_ts"]);
    }

    #[test]
    fn persisted_fused_matrix_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let (state, _) = run_through(&config(dir.path(), &SMALL), Stage::Eval).unwrap();
        let bin = SparseSimMatrix::read_binary(dir.path().join("m_f.bin")).unwrap();
        let text = SparseSimMatrix::read_text(dir.path().join("m_f.tsv")).unwrap();
        assert_eq!(Some(&bin), state.m_f.as_ref());
        assert_eq!(bin.shape(), text.shape());
        assert_eq!(bin.nnz(), text.nnz());
        let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
        for key in [
            "hits@1=",
            "hits@10=",
            "mrr=",
            "seconds.fuse=",
            "peak_memory_bytes=",
        ] {
            assert!(report.contains(key), "{key} missing from\n{report}");
        }
        let ids = std::fs::read_to_string(dir.path().join("embeddings.ids.tsv")).unwrap();
        assert_eq!(
            ids.lines().count(),
            state.source.num_entities() + state.target.num_entities()
        );
    }

    #[test]
    fn cmcs_only_ablation_uses_the_mapping_sampler_alone() {
        let dir = tempfile::tempdir().unwrap();
        let mut extra = SMALL.to_vec();
        extra.push(("sampler", "cmcs-only"));
        let cfg = config(dir.path(), &extra);
        let r = run_pipeline(&cfg).unwrap();
        let names: Vec<_> = r.overlaps.iter().map(|(s, _)| s.as_str()).collect();
        assert_eq!(names, ["cmcs"]);
        assert!(!dir.path().join("assignments/iscs_st.source.tsv").exists());

        let p = dir.path();
        let s = BatchAssignment::read_side(p.join("assignments/cmcs.source.tsv")).unwrap();
        let t = BatchAssignment::read_side(p.join("assignments/cmcs.target.tsv")).unwrap();
        let a = BatchAssignment::new(cfg.partition.k, s, t).unwrap();
        let emb = read_embeddings(p.join("embeddings.bin"))
            .unwrap()
            .l2_normalized();
        let m_c = local_matrix("cmcs", &a, &emb, &FusionConfig::default()).unwrap();
        let m_l = SparseSimMatrix::read_binary(p.join("m_l.bin")).unwrap();
        assert_eq!(m_l, m_c);
    }

    #[test]
    fn deterministic_runs_report_identical_metrics() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ra = run_pipeline(&config(a.path(), &SMALL)).unwrap();
        let rb = run_pipeline(&config(b.path(), &SMALL)).unwrap();
        assert_eq!(ra.metrics(), rb.metrics());
        let read = |d: &Path| std::fs::read(d.join("m_f.bin")).unwrap();
        assert_eq!(read(a.path()), read(b.path()));
    }

    #[test]
    fn resuming_reuses_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), &SMALL);
        let first = run_pipeline(&cfg).unwrap();
        for stage in [Stage::Train, Stage::Sample, Stage::Fuse, Stage::Eval] {
            let again = run_pipeline(&PipelineConfig {
                resume_from: Some(stage),
                ..cfg.clone()
            })
            .unwrap();
            assert_eq!(first.metrics(), again.metrics(), "resume from {stage}");
            assert_eq!(again.stage_seconds.len(), 5);
        }
        // artifacts from another run are what a resumed stage reads
        std::fs::remove_file(dir.path().join("m_f.bin")).unwrap();
        let err = run_pipeline(&PipelineConfig {
            resume_from: Some(Stage::Eval),
            ..cfg
        })
        .unwrap_err();
        assert_eq!(err.stage(), Some(Stage::Fuse));
    }

    #[test]
    fn sampler_study_covers_every_sampler_and_k() {
        let dir = tempfile::tempdir().unwrap();
        let rows = run_sampler_study(&config(dir.path(), &SMALL), &[2, 4, 6]).unwrap();
        assert_eq!(rows.len(), 12);
        let first: Vec<_> = rows[..4].iter().map(|r| r.sampler.as_str()).collect();
        assert_eq!(first, ["vps", "metis-cps", "cmcs", "iscs"]);
        assert!(rows
            .iter()
            .all(|r| (0.0..=1.0).contains(&r.overlap) && r.seconds >= 0.0));
        let csv = std::fs::read_to_string(dir.path().join("study.csv")).unwrap();
        assert_eq!(csv.lines().count(), 13);
    }
}
