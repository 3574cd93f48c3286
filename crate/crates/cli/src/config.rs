//! Pipeline configuration.
//!
//! The file format is flat `key = value` lines grouped under optional
//! `[section]` headers; `#` starts a comment. Every key has a command-line
//! flag of the same name, and flags override the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use kgalign_core::embed::Activation;
use kgalign_core::sampler::ClassifierKind;
use kgalign_core::{FusionConfig, PartitionerConfig, SyntheticSpec, TrainConfig};

/// Where the two graphs and their alignment come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Files {
        source: PathBuf,
        target: PathBuf,
        links: PathBuf,
        source_entities: Option<PathBuf>,
        target_entities: Option<PathBuf>,
    },
}

/// Which local similarity matrices feed the fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerChoice {
    /// CMCS plus ISCS in both directions.
    #[default]
    Full,
    CmcsOnly,
    Iscs,
    Vps,
    MetisCps,
}

impl FromStr for SamplerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(SamplerChoice::Full),
            "cmcs" | "cmcs-only" => Ok(SamplerChoice::CmcsOnly),
            "iscs" => Ok(SamplerChoice::Iscs),
            "vps" => Ok(SamplerChoice::Vps),
            "metis-cps" => Ok(SamplerChoice::MetisCps),
            _ => Err(format!(
                "unknown sampler {s:?} (expected full, cmcs-only, iscs, vps or metis-cps)"
            )),
        }
    }
}

impl fmt::Display for SamplerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerChoice::Full => "full",
            SamplerChoice::CmcsOnly => "cmcs-only",
            SamplerChoice::Iscs => "iscs",
            SamplerChoice::Vps => "vps",
            SamplerChoice::MetisCps => "metis-cps",
        })
    }
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Data,
    Train,
    Sample,
    Fuse,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Data,
        Stage::Train,
        Stage::Sample,
        Stage::Fuse,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Data => "data",
            Stage::Train => "train",
            Stage::Sample => "sample",
            Stage::Fuse => "fuse",
            Stage::Eval => "eval",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub data: DataSource,
    pub train: TrainConfig,
    pub partition: PartitionerConfig,
    pub fusion: FusionConfig,
    pub sampler: SamplerChoice,
    pub train_ratio: f64,
    pub split_seed: u64,
    pub hits: Vec<usize>,
    pub output: PathBuf,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub resume_from: Option<Stage>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data: DataSource::Synthetic(SyntheticSpec::default()),
            train: TrainConfig::default(),
            partition: PartitionerConfig::default(),
            fusion: FusionConfig::default(),
            sampler: SamplerChoice::Full,
            train_ratio: 0.3,
            split_seed: 0,
            hits: vec![1, 10],
            output: PathBuf::from("kgalign-out"),
            threads: None,
            resume_from: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{origin}: {message}")]
pub struct ConfigError {
    pub origin: String,
    pub message: String,
}

/// Section each key lives in. Keys outside any section are accepted as-is.
const KEYS: &[(&str, &[&str])] = &[
    (
        "data",
        &[
            "source",
            "target",
            "links",
            "source-entities",
            "target-entities",
            "entities",
            "relations",
            "avg-degree",
            "dropout",
            "remap",
            "synth-seed",
        ],
    ),
    (
        "train",
        &[
            "dim",
            "layers",
            "fanout",
            "np",
            "nn",
            "epochs",
            "lr",
            "gamma",
            "lambda",
            "activation",
            "residual",
            "detach-stats",
        ],
    ),
    (
        "sampler",
        &[
            "sampler",
            "num-batches",
            "classifier",
            "kmeans-max-iter",
            "kmeans-tol",
            "gcn-epochs",
            "gcn-lr",
            "gcn-hidden",
            "seed-weight",
        ],
    ),
    ("fusion", &["sinkhorn-iters", "topk", "csls-k", "tau"]),
    ("eval", &["hits"]),
    (
        "pipeline",
        &[
            "train-ratio",
            "split-seed",
            "seed",
            "output",
            "threads",
            "deterministic",
            "resume-from",
        ],
    ),
];

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter()
        .find(|(_, keys)| keys.contains(&key))
        .map(|(s, _)| *s)
}

/// Every recognized key.
pub fn known_keys() -> impl Iterator<Item = &'static str> {
    KEYS.iter().flat_map(|(_, keys)| keys.iter().copied())
}

/// Parse config text into `(key, value)` pairs in file order.
pub fn parse_config(text: &str, origin: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let err = |line: usize, message: String| ConfigError {
        origin: format!("{origin}:{line}"),
        message,
    };
    let mut section: Option<String> = None;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(i + 1, format!("unterminated section header {line:?}")))?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(err(i + 1, format!("unknown section [{name}]")));
            }
            section = Some(name.to_owned());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(i + 1, format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        match (section_of(key), &section) {
            (None, _) => return Err(err(i + 1, format!("unknown key {key:?}"))),
            (Some(home), Some(s)) if home != s => {
                return Err(err(
                    i + 1,
                    format!("key {key:?} belongs in [{home}], not [{s}]"),
                ))
            }
            _ => out.push((key.to_owned(), value.to_owned())),
        }
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        origin: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text, &path.display().to_string())
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("bad value {value:?} for {key}: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!(
            "bad value {value:?} for {key}: expected true or false"
        )),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, String> {
    value
        .split(',')
        .map(|v| parse::<usize>(key, v.trim()))
        .collect()
}

impl PipelineConfig {
    fn synthetic_mut(&mut self) -> &mut SyntheticSpec {
        if !matches!(self.data, DataSource::Synthetic(_)) {
            self.data = DataSource::Synthetic(SyntheticSpec::default());
        }
        match &mut self.data {
            DataSource::Synthetic(s) => s,
            DataSource::Files { .. } => unreachable!(),
        }
    }

    fn files_mut(
        &mut self,
    ) -> (
        &mut PathBuf,
        &mut PathBuf,
        &mut PathBuf,
        &mut Option<PathBuf>,
        &mut Option<PathBuf>,
    ) {
        if !matches!(self.data, DataSource::Files { .. }) {
            self.data = DataSource::Files {
                source: PathBuf::new(),
                target: PathBuf::new(),
                links: PathBuf::new(),
                source_entities: None,
                target_entities: None,
            };
        }
        match &mut self.data {
            DataSource::Files {
                source,
                target,
                links,
                source_entities,
                target_entities,
            } => (source, target, links, source_entities, target_entities),
            DataSource::Synthetic(_) => unreachable!(),
        }
    }

    /// Set one key. `seed` sets the synthetic, split, training and sampler
    /// seeds at once.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "source" => *self.files_mut().0 = value.into(),
            "target" => *self.files_mut().1 = value.into(),
            "links" => *self.files_mut().2 = value.into(),
            "source-entities" => *self.files_mut().3 = Some(value.into()),
            "target-entities" => *self.files_mut().4 = Some(value.into()),
            "entities" => self.synthetic_mut().n_entities = parse(key, value)?,
            "relations" => self.synthetic_mut().n_relations = parse(key, value)?,
            "avg-degree" => self.synthetic_mut().avg_degree = parse(key, value)?,
            "dropout" => self.synthetic_mut().edge_dropout = parse(key, value)?,
            "remap" => self.synthetic_mut().relation_remap_prob = parse(key, value)?,
            "synth-seed" => self.synthetic_mut().rng_seed = parse(key, value)?,

            "dim" => self.train.dim = parse(key, value)?,
            "layers" => self.train.layers = parse(key, value)?,
            "fanout" => self.train.fanout = parse(key, value)?,
            "np" => self.train.n_pairs = parse(key, value)?,
            "nn" => self.train.n_neg = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "lr" => self.train.learning_rate = parse(key, value)?,
            "gamma" => self.train.gamma = parse(key, value)?,
            "lambda" => self.train.lambda = parse(key, value)?,
            "activation" => {
                self.train.activation = value.parse::<Activation>().map_err(|e| e.to_string())?
            }
            "residual" => self.train.residual = parse_bool(key, value)?,
            "detach-stats" => self.train.detach_stats = parse_bool(key, value)?,

            "sampler" => self.sampler = value.parse()?,
            "num-batches" => self.partition.k = parse(key, value)?,
            "classifier" => {
                self.partition.classifier =
                    value.parse::<ClassifierKind>().map_err(|e| e.to_string())?
            }
            "kmeans-max-iter" => self.partition.kmeans_max_iter = parse(key, value)?,
            "kmeans-tol" => self.partition.kmeans_tol = parse(key, value)?,
            "gcn-epochs" => self.partition.gcn_classifier_epochs = parse(key, value)?,
            "gcn-lr" => self.partition.gcn_classifier_lr = parse(key, value)?,
            "gcn-hidden" => self.partition.gcn_hidden = parse(key, value)?,
            "seed-weight" => self.partition.seed_vertex_weight = parse(key, value)?,

            "sinkhorn-iters" => self.fusion.sinkhorn_iters = parse(key, value)?,
            "topk" => self.fusion.topk = parse(key, value)?,
            "csls-k" => self.fusion.csls_k = parse(key, value)?,
            "tau" => self.fusion.tau = parse(key, value)?,

            "hits" => self.hits = parse_list(key, value)?,

            "train-ratio" => self.train_ratio = parse(key, value)?,
            "split-seed" => self.split_seed = parse(key, value)?,
            "seed" => {
                let s: u64 = parse(key, value)?;
                if let DataSource::Synthetic(spec) = &mut self.data {
                    spec.rng_seed = s;
                }
                self.split_seed = s;
                self.train.rng_seed = s;
                self.partition.rng_seed = s;
            }
            "output" => self.output = value.into(),
            "threads" => self.threads = Some(parse(key, value)?),
            "deterministic" => self.train.deterministic = parse_bool(key, value)?,
            "resume-from" => self.resume_from = Some(value.parse()?),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Build from defaults plus `pairs`, applied in order except that `seed`
    /// goes first so specific seeds can override it.
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, ConfigError> {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let mut cfg = PipelineConfig::default();
        // data keys decide the source kind before `seed` touches it
        let ordered = pairs
            .iter()
            .filter(|(k, _)| section_of(k) == Some("data"))
            .chain(pairs.iter().filter(|(k, _)| *k == "seed"))
            .chain(
                pairs
                    .iter()
                    .filter(|(k, _)| *k != "seed" && section_of(k) != Some("data")),
            );
        for &(k, v) in ordered {
            cfg.apply(k, v).map_err(|message| ConfigError {
                origin: format!("key {k}"),
                message,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |message: String| ConfigError {
            origin: "config".into(),
            message,
        };
        match &self.data {
            DataSource::Synthetic(s) => s.validate().map_err(|e| fail(e.to_string()))?,
            DataSource::Files {
                source,
                target,
                links,
                ..
            } => {
                for (name, p) in [("source", source), ("target", target), ("links", links)] {
                    if p.as_os_str().is_empty() {
                        return Err(fail(format!("dataset files given but {name} is missing")));
                    }
                }
            }
        }
        self.train.validate().map_err(|e| fail(e.to_string()))?;
        self.partition.validate().map_err(|e| fail(e.to_string()))?;
        self.fusion.validate().map_err(|e| fail(e.to_string()))?;
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(fail(format!(
                "train-ratio must lie in (0, 1), got {}",
                self.train_ratio
            )));
        }
        if self.hits.is_empty() || self.hits.contains(&0) {
            return Err(fail("hits needs one or more positive cut-offs".into()));
        }
        if self.threads == Some(0) {
            return Err(fail("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Effective worker count: one in deterministic mode.
    pub fn worker_threads(&self) -> Option<usize> {
        if self.train.deterministic {
            Some(1)
        } else {
            self.threads
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let text = "# run\n[train]\ndim = 64  # small\nepochs=3\n\n[sampler]\nsampler = cmcs-only\nnum-batches = 7\n[eval]\nhits = 1, 5,10\n";
        let pairs = parse_config(text, "t").unwrap();
        let cfg = PipelineConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .unwrap();
        assert_eq!(cfg.train.dim, 64);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.sampler, SamplerChoice::CmcsOnly);
        assert_eq!(cfg.partition.k, 7);
        assert_eq!(cfg.hits, vec![1, 5, 10]);
    }

    #[test]
    fn key_in_wrong_section_is_rejected() {
        let e = parse_config("[fusion]\ndim = 3\n", "f").unwrap_err();
        assert_eq!(e.origin, "f:2");
        assert!(e.message.contains("[train]"));
        assert!(parse_config("[nope]\n", "f").is_err());
        assert!(parse_config("dim 3\n", "f").is_err());
        assert!(parse_config("colour = red\n", "f").is_err());
    }

    #[test]
    fn later_values_override_earlier_ones() {
        let cfg = PipelineConfig::from_pairs([("epochs", "3"), ("epochs", "9")]).unwrap();
        assert_eq!(cfg.train.epochs, 9);
    }

    #[test]
    fn seed_is_applied_before_specific_seeds() {
        let cfg = PipelineConfig::from_pairs([("split-seed", "5"), ("seed", "2")]).unwrap();
        assert_eq!(cfg.split_seed, 5);
        assert_eq!(cfg.train.rng_seed, 2);
        assert_eq!(cfg.partition.rng_seed, 2);
        match cfg.data {
            DataSource::Synthetic(s) => assert_eq!(s.rng_seed, 2),
            _ => panic!(),
        }
    }

    #[test]
    fn file_data_source_needs_all_three_paths() {
        let cfg =
            PipelineConfig::from_pairs([("source", "a"), ("target", "b"), ("links", "c")]).unwrap();
        assert!(matches!(cfg.data, DataSource::Files { .. }));
        let e = PipelineConfig::from_pairs([("source", "a"), ("links", "c")]).unwrap_err();
        assert!(e.message.contains("target"));
    }

    #[test]
    fn invalid_values_are_reported() {
        for (k, v) in [
            ("dim", "x"),
            ("train-ratio", "1.5"),
            ("hits", "0"),
            ("sampler", "random"),
            ("deterministic", "maybe"),
            ("resume-from", "later"),
            ("lambda", "0"),
            ("threads", "0"),
        ] {
            assert!(PipelineConfig::from_pairs([(k, v)]).is_err(), "{k}={v}");
        }
    }

    #[test]
    fn deterministic_forces_one_worker() {
        let cfg =
            PipelineConfig::from_pairs([("threads", "4"), ("deterministic", "true")]).unwrap();
        assert_eq!(cfg.worker_threads(), Some(1));
    }

    #[test]
    fn every_key_is_settable() {
        let sample = |k: &str| match k {
            "sampler" => "vps",
            "activation" => "relu",
            "classifier" => "gbt",
            "residual" | "detach-stats" | "deterministic" => "true",
            "resume-from" => "fuse",
            "hits" => "1,3",
            "dropout" | "remap" | "kmeans-tol" | "lr" | "gcn-lr" | "tau" | "train-ratio" => "0.2",
            "source" | "target" | "links" | "source-entities" | "target-entities" | "output" => "p",
            _ => "4",
        };
        for key in known_keys() {
            let mut cfg = PipelineConfig::default();
            cfg.apply(key, sample(key))
                .unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }
}
