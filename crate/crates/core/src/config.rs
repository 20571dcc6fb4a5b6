//! The toolkit's TOML configuration. Relative paths resolve against the
//! directory holding the config file.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{CleanOptions, DEFAULT_SEED};
use crate::defects::ScannerConfig;
use crate::detector::ClassificationTable;
use crate::generation::BackendDescriptor;
use crate::metrics::MatchOptions;
use crate::prompt::{
    ForgeOptions, InsertionOffset, InstructionPlacement, VariantKind, DEFAULT_INSTRUCTION, DEFAULT_SIMILARITY, DEFAULT_TAG,
    DEFAULT_TRUNCATE_FRACTION,
};
use crate::source::CorpusFilter;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Node kinds moved between the non-trivial and trivial classes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub nontrivial: Vec<String>,
    pub trivial: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForgeSection {
    pub kinds: Vec<VariantKind>,
    pub offsets: Vec<InsertionOffset>,
    pub instructed_offsets: Vec<InsertionOffset>,
    pub truncate_fraction: f64,
    pub tag: String,
    pub instruction: String,
    pub instruction_placement: InstructionPlacement,
    pub similarity_threshold: f64,
    /// Defect-free blocks for random insertion; defaults to the pool
    /// written by `codefects`.
    pub random_pool: Option<PathBuf>,
}

impl Default for ForgeSection {
    fn default() -> Self {
        ForgeSection {
            kinds: vec![VariantKind::Blank, VariantKind::FullInsertion],
            offsets: InsertionOffset::ALL.to_vec(),
            instructed_offsets: vec![InsertionOffset::new(1).expect("valid")],
            truncate_fraction: DEFAULT_TRUNCATE_FRACTION,
            tag: DEFAULT_TAG.to_owned(),
            instruction: DEFAULT_INSTRUCTION.to_owned(),
            instruction_placement: InstructionPlacement::Top,
            similarity_threshold: DEFAULT_SIMILARITY,
            random_pool: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToolkitConfig {
    pub seed: u64,
    /// Samples drawn for the dataset; all cleaned samples when absent.
    pub sample_size: Option<usize>,
    pub output: PathBuf,
    pub corpus: CorpusFilter,
    pub detector: DetectorSection,
    pub scanner: Option<ScannerConfig>,
    pub dataset: CleanOptions,
    pub forge: ForgeSection,
    pub matching: MatchOptions,
    pub backends: Vec<BackendDescriptor>,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        ToolkitConfig {
            seed: DEFAULT_SEED,
            sample_size: None,
            output: PathBuf::from("cotrap-out"),
            corpus: CorpusFilter::default(),
            detector: DetectorSection::default(),
            scanner: None,
            dataset: CleanOptions::default(),
            forge: ForgeSection::default(),
            matching: MatchOptions::default(),
            backends: Vec::new(),
        }
    }
}

fn resolve(base: &Path, path: &mut PathBuf) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

impl ToolkitConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: ToolkitConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: base.to_owned(),
            message: e.to_string(),
        })?;
        resolve(base, &mut cfg.output);
        if let Some(pool) = cfg.forge.random_pool.as_mut() {
            resolve(base, pool);
        }
        for b in &mut cfg.backends {
            if let Some(dir) = b.completions_dir.as_mut() {
                resolve(base, dir);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        ToolkitConfig::parse(&text, base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_owned(),
                message,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.sample_size == Some(0) {
            return invalid("sample_size must be positive".into());
        }
        let f = self.forge.truncate_fraction;
        if !(f > 0.0 && f < 1.0) {
            return invalid(format!("forge.truncate_fraction {f} must be strictly between 0 and 1"));
        }
        let t = self.forge.similarity_threshold;
        if !(0.0..=1.0).contains(&t) {
            return invalid(format!("forge.similarity_threshold {t} must be within [0, 1]"));
        }
        if self.forge.tag.is_empty() {
            return invalid("forge.tag must be non-empty".into());
        }
        if let Some(s) = &self.scanner {
            s.validate().map_err(|e| ConfigError::Invalid(format!("scanner: {e}")))?;
        }
        if let Err(e) = self.classification_table() {
            return invalid(format!("detector: {e}"));
        }
        let mut ids = HashSet::new();
        for b in &self.backends {
            b.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            if !ids.insert(b.id.as_str()) {
                return invalid(format!("duplicate backend id {:?}", b.id));
            }
        }
        Ok(())
    }

    pub fn classification_table(&self) -> Result<ClassificationTable, String> {
        ClassificationTable::default().with_overrides(&self.detector.nontrivial, &self.detector.trivial)
    }

    pub fn forge_options(&self) -> ForgeOptions {
        ForgeOptions {
            offsets: self.forge.offsets.clone(),
            instructed_offsets: self.forge.instructed_offsets.clone(),
            truncate_fraction: self.forge.truncate_fraction,
            tag: self.forge.tag.clone(),
            instruction: self.forge.instruction.clone(),
            instruction_placement: self.forge.instruction_placement.clone(),
            seed: self.seed,
        }
    }
}
