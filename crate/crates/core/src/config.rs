//! The run configuration: one TOML file per run, with a required `seed`.
//!
//! Relative paths are resolved against the directory of the config file.
//! Every input path named in the file must exist when it is loaded.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cg::{AdpositionLexicon, DonorScope, FallbackPolicy, GenerationConfig};
use crate::probe::{BestLayerBy, HyperParams};
use crate::schema::SchemaConfig;
use crate::tasks::{CaseMap, TaskConfig, TaskKind};
use crate::{Error, Result};

/// The text printed by `--print-default-config`.
pub const DEFAULT_CONFIG: &str = r#"# Every source of randomness derives from this value.
seed = 1

[paths]
# Source CoNLL-U splits. Only the subcommands that read them require them.
# train = "UD_Hindi-HDTB/hi_hdtb-ud-train.conllu"
# dev = "UD_Hindi-HDTB/hi_hdtb-ud-dev.conllu"
# test = "UD_Hindi-HDTB/hi_hdtb-ud-test.conllu"
output_dir = "out"
# TSV of gender-inflected adpositions: form, masculine, feminine.
# adposition_lexicon = "adpositions.tsv"
# TSV of UD Case value -> GCM label.
# case_map = "case_map.tsv"

[ingest]
# Skip (with a warning) sentences whose tree is invalid instead of failing.
lenient = true

[schema]
include_propn = false

[schema.features]
noun = ["Gender", "Number", "Case"]
verb = ["Gender", "Number", "Person"]
adjective = ["Gender", "Number", "Case"]
adverb = ["Gender", "Number", "Case"]

[generation]
# "whole-treebank" or "within-split".
donor_scope = "whole-treebank"
# "keep-original" or "drop-sentence".
fallback = "keep-original"
exclude_same_sentence = true

[tasks]
build = ["POS", "STDP", "GCM", "SVA"]
sva_include_aux = false
depth_counts_nodes = false

[probe]
# Embedding files (VYKE1) covering every sentence of the probed treebank.
embeddings = []
# "source" or "cg": which treebank's task files to probe.
input = "source"
treebank_name = "HDTB"
# Omit to sweep every layer.
# layers = [0, 1, 2]
# "test" or "dev".
best_layer_by = "test"
learning_rate = 0.001
batch_size = 256
max_epochs = 20
patience = 3
beta1 = 0.9
beta2 = 0.999
epsilon = 1e-8
init_seed = 42
"#;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub adposition_lexicon: Option<PathBuf>,
    pub case_map: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            train: None,
            dev: None,
            test: None,
            output_dir: PathBuf::from("out"),
            adposition_lexicon: None,
            case_map: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub lenient: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { lenient: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSection {
    pub donor_scope: DonorScope,
    pub fallback: FallbackPolicy,
    pub exclude_same_sentence: bool,
}

impl Default for GenerationSection {
    fn default() -> Self {
        GenerationSection {
            donor_scope: DonorScope::default(),
            fallback: FallbackPolicy::default(),
            exclude_same_sentence: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TasksSection {
    pub build: Vec<TaskKind>,
    pub sva_include_aux: bool,
    pub depth_counts_nodes: bool,
}

impl Default for TasksSection {
    fn default() -> Self {
        TasksSection {
            build: TaskKind::ALL.to_vec(),
            sva_include_aux: false,
            depth_counts_nodes: false,
        }
    }
}

impl TasksSection {
    pub fn task_config(&self) -> TaskConfig {
        TaskConfig {
            sva_include_aux: self.sva_include_aux,
            depth_counts_nodes: self.depth_counts_nodes,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeInput {
    #[default]
    Source,
    Cg,
}

impl ProbeInput {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeInput::Source => "source",
            ProbeInput::Cg => "cg",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub embeddings: Vec<PathBuf>,
    pub input: ProbeInput,
    pub treebank_name: String,
    pub layers: Option<Vec<usize>>,
    pub best_layer_by: BestLayerBy,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub init_seed: u64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        let h = HyperParams::default();
        ProbeSection {
            embeddings: Vec::new(),
            input: ProbeInput::default(),
            treebank_name: "HDTB".into(),
            layers: None,
            best_layer_by: BestLayerBy::default(),
            learning_rate: h.learning_rate,
            batch_size: h.batch_size,
            max_epochs: h.max_epochs,
            patience: h.patience,
            beta1: h.beta1,
            beta2: h.beta2,
            epsilon: h.epsilon,
            init_seed: h.init_seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub ingest: IngestConfig,
    #[serde(default)]
    pub schema: SchemaConfig,
    #[serde(default)]
    pub generation: GenerationSection,
    #[serde(default)]
    pub tasks: TasksSection,
    #[serde(default)]
    pub probe: ProbeSection,
}

impl RunConfig {
    /// Parse without touching the file system.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.hyper().check()?;
        if config.probe.patience == 0 {
            return Err(Error::Config("probe.patience must be at least 1".into()));
        }
        Ok(config)
    }

    /// Read, resolve relative paths against the file's directory and check
    /// that every input path exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve(base);
        config.check_inputs()?;
        Ok(config)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        for p in [&mut paths.train, &mut paths.dev, &mut paths.test, &mut paths.adposition_lexicon, &mut paths.case_map]
            .into_iter()
            .flatten()
        {
            join(p);
        }
        join(&mut paths.output_dir);
        self.probe.embeddings.iter_mut().for_each(join);
    }

    fn check_inputs(&self) -> Result<()> {
        let p = &self.paths;
        let inputs = [&p.train, &p.dev, &p.test, &p.adposition_lexicon, &p.case_map]
            .into_iter()
            .flatten()
            .chain(&self.probe.embeddings);
        for path in inputs {
            if !path.exists() {
                return Err(Error::Config(format!("{}: no such file", path.display())));
            }
        }
        Ok(())
    }

    /// The three source split paths, or a config error naming the first gap.
    pub fn source_paths(&self) -> Result<[&Path; 3]> {
        fn get<'a>(p: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
            p.as_deref()
                .ok_or_else(|| Error::Config(format!("paths.{name} is not set")))
        }
        Ok([
            get(&self.paths.train, "train")?,
            get(&self.paths.dev, "dev")?,
            get(&self.paths.test, "test")?,
        ])
    }

    pub fn generation_config(&self) -> Result<GenerationConfig> {
        let adpositions = match &self.paths.adposition_lexicon {
            Some(path) => AdpositionLexicon::load(path)?,
            None => AdpositionLexicon::hindi_default(),
        };
        Ok(GenerationConfig {
            seed: self.seed,
            donor_scope: self.generation.donor_scope,
            fallback: self.generation.fallback,
            exclude_same_sentence: self.generation.exclude_same_sentence,
            adpositions,
        })
    }

    pub fn case_map(&self) -> Result<CaseMap> {
        match &self.paths.case_map {
            Some(path) => CaseMap::load(path),
            None => Ok(CaseMap::default()),
        }
    }

    /// Probe hyperparameters; mini-batch order is seeded by the run seed.
    pub fn hyper(&self) -> HyperParams {
        let p = &self.probe;
        HyperParams {
            learning_rate: p.learning_rate,
            batch_size: p.batch_size,
            max_epochs: p.max_epochs,
            patience: p.patience,
            beta1: p.beta1,
            beta2: p.beta2,
            epsilon: p.epsilon,
            init_seed: p.init_seed,
            shuffle_seed: self.seed,
        }
    }

    pub fn cg_dir(&self) -> PathBuf {
        self.paths.output_dir.join("cg")
    }

    pub fn tasks_dir(&self, input: ProbeInput) -> PathBuf {
        self.paths.output_dir.join("tasks").join(input.as_str())
    }

    pub fn probe_dir(&self) -> PathBuf {
        self.paths.output_dir.join("probe")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_text_matches_defaults() {
        let config = RunConfig::from_toml(DEFAULT_CONFIG).unwrap();
        assert_eq!(config.seed, 1);
        assert_eq!(config.paths, PathsConfig::default());
        assert_eq!(config.ingest, IngestConfig::default());
        assert_eq!(config.schema, SchemaConfig::default());
        assert_eq!(config.generation, GenerationSection::default());
        assert_eq!(config.tasks, TasksSection::default());
        assert_eq!(config.probe, ProbeSection::default());
        assert_eq!(
            config.hyper(),
            HyperParams {
                shuffle_seed: 1,
                ..HyperParams::default()
            }
        );
    }

    #[test]
    fn seed_is_required() {
        let err = RunConfig::from_toml("[paths]\noutput_dir = \"x\"\n").unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("seed = 1\n[probe]\nlr = 1.0\n").is_err());
        assert!(RunConfig::from_toml("seed = 1\ncolour = 1\n").is_err());
    }

    #[test]
    fn bad_hyperparameters_are_config_errors() {
        let err = RunConfig::from_toml("seed = 1\n[probe]\nbatch_size = 0\n").unwrap_err();
        assert!(err.is_config_error());
    }

    #[test]
    fn relative_paths_and_existence() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("train.conllu"), "").unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(&cfg, "seed = 3\n[paths]\ntrain = \"train.conllu\"\n").unwrap();
        let config = RunConfig::load(&cfg).unwrap();
        assert_eq!(config.paths.train.as_deref(), Some(dir.path().join("train.conllu").as_path()));
        assert_eq!(config.paths.output_dir, dir.path().join("out"));
        assert!(config.source_paths().is_err());

        fs::write(&cfg, "seed = 3\n[paths]\ndev = \"missing.conllu\"\n").unwrap();
        let err = RunConfig::load(&cfg).unwrap_err();
        assert!(err.to_string().contains("missing.conllu"), "{err}");
    }
}
