//! End-to-end steps that tie the modules together over an output tree.
//!
//! Layout under the output root:
//! `scan/`, `codefects/`, `dataset/`, `prompts/`, `generated/`,
//! `evaluation/` and `report/`.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::dataset::{self, CleanOptions, DatasetError, DatasetSample};
use crate::defects::{
    co_defect_stats, ingest_sarif_str, run_external_scanner, uncomment_in_place, CoDefectReport, DefectFinding, IngestSkip,
    Ingestion, SarifError, ScannedFile, ScannerConfig, ScannerError, Snapshot, UncommentOutcome,
};
use crate::detector::{CoVerdict, Detector, EmptyTotal, FileVerdicts};
use crate::generation::{GeneratedEntry, GenerationStatus, VariantKey};
use crate::metrics::{detect_reintroduction, EvaluationRecord, MatchOptions};
use crate::prompt::{classify_sparsity, forge_suite, ForgeOptions, PoolBlock, PromptVariant, RandomPool, Suite, VariantKind};
use crate::source::{extract_comment_blocks, CommentBlock, CorpusError, SkipRecord, SourceFile};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Scanner(#[from] ScannerError),
    #[error(transparent)]
    Sarif(#[from] SarifError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Empty(#[from] EmptyTotal),
    #[error(transparent)]
    Forge(#[from] crate::prompt::ForgeError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Backend(#[from] crate::generation::BackendConfigError),
    #[error("{what} not found at {path}; run `{producer}` first")]
    Missing { what: &'static str, path: PathBuf, producer: &'static str },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Other(String),
}

pub fn io_at(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_owned(),
        source,
    }
}

pub fn require(path: &Path, what: &'static str, producer: &'static str) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::Missing {
            what,
            path: path.to_owned(),
            producer,
        })
    }
}

/// The repository a corpus file belongs to: its first path component, or
/// `.` for files at the corpus root.
pub fn repository_of(path: &Path) -> String {
    let mut comps = path.components();
    match (comps.next(), comps.next()) {
        (Some(first), Some(_)) => first.as_os_str().to_string_lossy().into_owned(),
        _ => ".".to_owned(),
    }
}

pub fn detect_file(detector: &Detector, file: &SourceFile) -> (usize, Vec<CoVerdict>) {
    let blocks = extract_comment_blocks(file);
    let comment_lines = blocks.iter().map(CommentBlock::line_count).sum();
    (comment_lines, blocks.iter().map(|b| detector.verdict(b)).collect())
}

pub fn analyze_files(detector: &Detector, files: &[SourceFile]) -> Vec<FileVerdicts> {
    files
        .iter()
        .map(|f| {
            let (comment_lines, verdicts) = detect_file(detector, f);
            FileVerdicts {
                repository: repository_of(&f.path),
                file: f.path.clone(),
                comment_lines,
                verdicts,
            }
        })
        .collect()
}

pub fn co_blocks(detector: &Detector, file: &SourceFile) -> Vec<CommentBlock> {
    extract_comment_blocks(file).into_iter().filter(|b| detector.count_commented_code(b) > 0).collect()
}

pub fn read_sarif(path: &Path, root: Option<&Path>) -> Result<Ingestion, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    Ok(ingest_sarif_str(&text, root)?)
}

/// Copies `files` into a private snapshot and scans it, keeping the SARIF
/// at `sarif_out`.
pub fn scan_files(scanner: &ScannerConfig, files: &[SourceFile], sarif_out: &Path) -> Result<Ingestion, PipelineError> {
    let snapshot = Snapshot::from_files(files.iter().map(|f| (f.path.as_path(), f.text.as_str()))).map_err(io_at(sarif_out))?;
    run_external_scanner(scanner, snapshot.path(), sarif_out)?;
    read_sarif(sarif_out, Some(snapshot.path()))
}

pub fn scan_dir(scanner: &ScannerConfig, dir: &Path, sarif_out: &Path) -> Result<Ingestion, PipelineError> {
    run_external_scanner(scanner, dir, sarif_out)?;
    let root = dir.canonicalize().unwrap_or_else(|_| dir.to_owned());
    let mut ingestion = read_sarif(sarif_out, Some(&root))?;
    for f in &mut ingestion.findings {
        if let Ok(rel) = f.file.strip_prefix(dir) {
            f.file = rel.to_owned();
        }
    }
    Ok(ingestion)
}

pub fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_at(parent))?;
    }
    let mut out = BufWriter::new(fs::File::create(path).map_err(io_at(path))?);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| io_at(path)(io::Error::other(e)))?;
        out.write_all(b"\n").map_err(io_at(path))?;
    }
    out.flush().map_err(io_at(path))
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let file = fs::File::open(path).map_err(io_at(path))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_at(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| PipelineError::Other(format!("{}:{}: {e}", path.display(), n + 1)))?);
    }
    Ok(out)
}

/// Files with their CO blocks uncommented, ready for scanning.
#[derive(Debug, Default)]
pub struct UncommentedCorpus {
    pub files: Vec<SourceFile>,
    pub scanned: Vec<ScannedFile>,
    pub blocks: HashMap<PathBuf, Vec<CommentBlock>>,
    pub skipped: Vec<SkipRecord>,
}

pub fn uncomment_corpus(detector: &Detector, files: &[SourceFile]) -> UncommentedCorpus {
    let mut out = UncommentedCorpus::default();
    for file in files {
        let blocks = co_blocks(detector, file);
        if blocks.is_empty() {
            continue;
        }
        match uncomment_in_place(file, &blocks) {
            UncommentOutcome::Transformed { text, spans } => {
                out.files.push(SourceFile::new(file.path.clone(), text));
                out.scanned.push(ScannedFile {
                    repository: repository_of(&file.path),
                    file: file.path.clone(),
                    co_blocks: spans,
                });
                out.blocks.insert(file.path.clone(), blocks);
            }
            UncommentOutcome::Skipped { reason } => out.skipped.push(SkipRecord {
                path: file.path.to_string_lossy().into_owned(),
                reason,
            }),
        }
    }
    out
}

/// The defective-CO report and the pool of CO blocks nothing was found in.
pub fn co_defects(
    repository_total: u64,
    corpus: &UncommentedCorpus,
    findings: &[DefectFinding],
) -> Result<(CoDefectReport, RandomPool), PipelineError> {
    let report = co_defect_stats(repository_total, &corpus.scanned, findings, corpus.skipped.len())?;
    let mut pool = Vec::new();
    for scanned in &corpus.scanned {
        for block in corpus.blocks.get(&scanned.file).into_iter().flatten() {
            let clean = !findings.iter().any(|f| crate::defects::attributes_to(f, &scanned.file, block.span));
            if clean {
                pool.push(PoolBlock {
                    source: scanned.file.clone(),
                    span: block.span,
                    text: block.lines.join("\n"),
                });
            }
        }
    }
    Ok((report, RandomPool::new(pool)))
}

pub fn repository_count(files: &[SourceFile]) -> u64 {
    files.iter().map(|f| repository_of(&f.path)).collect::<BTreeSet<_>>().len() as u64
}

#[derive(Debug, Default)]
pub struct DatasetBuild {
    pub samples: Vec<DatasetSample>,
    pub excised: usize,
    pub cleaned: usize,
    pub excise_errors: Vec<String>,
}

pub fn build_dataset(
    files: &[SourceFile],
    findings: &[DefectFinding],
    clean: CleanOptions,
    sample_size: Option<usize>,
    seed: u64,
) -> Result<DatasetBuild, PipelineError> {
    let (excised, errors) = dataset::excise_all(files, findings);
    let excised_n = excised.len();
    let cleaned = dataset::clean(excised, clean);
    let cleaned_n = cleaned.len();
    let samples = match sample_size {
        Some(n) => dataset::proportional_sample(&cleaned, n, seed)?,
        None => cleaned,
    };
    Ok(DatasetBuild {
        samples,
        excised: excised_n,
        cleaned: cleaned_n,
        excise_errors: errors.iter().map(ToString::to_string).collect(),
    })
}

pub fn forge_dataset(samples: &[DatasetSample], kinds: &[VariantKind], options: &ForgeOptions, pool: Option<&RandomPool>) -> Suite {
    let mut suite = Suite::default();
    for s in samples {
        suite.extend(forge_suite(s, kinds, options, pool));
    }
    suite
}

/// Outcome of matching one backend's generated files against scanner
/// findings.
#[derive(Debug, Default)]
pub struct Evaluation {
    pub records: Vec<EvaluationRecord>,
    /// Variants whose generation failed; they carry no record.
    pub backend_errors: usize,
    pub unknown: Vec<String>,
}

/// `findings` paths are relative to the backend's generated directory.
pub fn evaluate_backend(
    backend: &str,
    samples: &[DatasetSample],
    variants: &[PromptVariant],
    entries: &[GeneratedEntry],
    findings: &[DefectFinding],
    options: &MatchOptions,
) -> Evaluation {
    let samples: HashMap<_, _> = samples.iter().map(|s| (s.sample_id, s)).collect();
    let variants: HashMap<VariantKey, &PromptVariant> = variants.iter().map(|v| (VariantKey::of(v), v)).collect();
    let mut by_file: HashMap<&Path, Vec<DefectFinding>> = HashMap::new();
    for f in findings {
        by_file.entry(f.file.as_path()).or_default().push(f.clone());
    }
    let mut eval = Evaluation::default();
    for entry in entries.iter().filter(|e| e.backend == backend) {
        if entry.status == GenerationStatus::BackendError {
            eval.backend_errors += 1;
            continue;
        }
        let key = entry.key();
        let (Some(sample), Some(variant)) = (samples.get(&entry.sample_id), variants.get(&key)) else {
            eval.unknown.push(key.file_stem());
            continue;
        };
        let rel = entry.file.strip_prefix(backend).unwrap_or(&entry.file);
        let in_file = by_file.get(rel).map(Vec::as_slice).unwrap_or_default();
        let matched = detect_reintroduction(
            in_file,
            &sample.defect.rule_id,
            entry.spliced_span,
            variant.completion_point_in_prompt,
            options,
        );
        eval.records.push(EvaluationRecord {
            sample_id: entry.sample_id,
            kind: entry.kind,
            offset: entry.offset,
            backend: backend.to_owned(),
            category: sample.defect.category,
            reintroduced: !matched.is_empty(),
            matched_findings: matched,
            sparsity_class: classify_sparsity(variant).ok(),
        });
    }
    eval
}

/// Skips as JSON lines, for diagnostics files.
pub fn skip_lines(skips: &[IngestSkip]) -> Vec<serde_json::Value> {
    skips.iter().map(|s| serde_json::to_value(s).expect("skips serialize")).collect()
}
