//! The `cotrap` command line.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 when a pipeline step fails.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::ToolkitConfig;
use crate::dataset::{self, ManifestHeader};
use crate::defects::{DefectFinding, ScannerConfig};
use crate::detector::{prevalence_stats, Detector};
use crate::generation::{self, generate_all, read_generated_index, write_generated, BackendDescriptor};
use crate::metrics::{tabulate, EvaluationRecord};
use crate::pipeline::{self as pl, io_at, require, PipelineError};
use crate::prompt::{parse_kinds, write_variants, RandomPool, VariantKind};
use crate::source::{enumerate_corpus, write_skip_log, SourceFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PIPELINE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cotrap", version, about = "Measure how commented-out code in prompts steers completions toward defects")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print a machine-readable summary on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Output root; overrides the configured one.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Upper bound on worker threads and concurrent scanner runs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scanner over a corpus and ingest its findings.
    Scan {
        corpus: PathBuf,
        /// Ingest an existing SARIF file instead of running the scanner.
        #[arg(long)]
        sarif: Option<PathBuf>,
    },
    /// Report the commented-out code blocks of a file or directory.
    Detect { path: PathBuf },
    /// Commented-out code prevalence at repository, file and line level.
    Prevalence { corpus: PathBuf },
    /// Scan uncommented CO blocks and report which carry defects.
    Codefects {
        corpus: PathBuf,
        #[arg(long)]
        sarif: Option<PathBuf>,
    },
    /// Excise defects into dataset samples.
    BuildDataset {
        corpus: PathBuf,
        /// Findings as JSON lines; defaults to the output of `scan`.
        #[arg(long)]
        findings: Option<PathBuf>,
        #[arg(long)]
        sample_size: Option<usize>,
    },
    /// Build prompt variants for every dataset sample.
    Forge {
        /// Comma-separated variant kinds, e.g. `full,blank`.
        #[arg(long)]
        kinds: Option<String>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Random-insertion pool as JSON lines.
        #[arg(long)]
        pool: Option<PathBuf>,
    },
    /// Obtain completions for the forged prompts.
    Generate {
        /// Backend id from the configuration, or `null`.
        #[arg(long)]
        backend: Option<String>,
        /// Replay completions from this directory under the given backend id.
        #[arg(long)]
        completions: Option<PathBuf>,
    },
    /// Scan generated files and decide which reintroduced their defect.
    Evaluate {
        #[arg(long)]
        backend: Option<String>,
        /// SARIF for the backend's generated directory, instead of scanning.
        #[arg(long)]
        sarif: Option<PathBuf>,
    },
    /// Tabulate evaluation records into CSV and markdown tables.
    Report,
}

struct Ctx<'a> {
    cfg: ToolkitConfig,
    out: PathBuf,
    json: bool,
    jobs: Option<usize>,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn dir(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn detector(&self) -> Result<Detector, PipelineError> {
        Ok(Detector::new(self.cfg.classification_table().map_err(PipelineError::Other)?))
    }

    fn scanner(&self) -> Result<ScannerConfig, PipelineError> {
        let mut s = self
            .cfg
            .scanner
            .clone()
            .ok_or_else(|| PipelineError::Other("no [scanner] configured; pass --sarif or add one to the config".into()))?;
        if let Some(j) = self.jobs {
            s.max_concurrent = s.max_concurrent.min(j.max(1));
        }
        Ok(s)
    }

    fn corpus(&mut self, root: &Path) -> Result<Vec<SourceFile>, PipelineError> {
        let listing = enumerate_corpus(root, &self.cfg.corpus)?;
        write_skip_log(&mut *self.stderr, &listing.skips).map_err(io_at(root))?;
        Ok(listing.files)
    }

    fn emit(&mut self, summary: Value, human: &str) -> Result<(), PipelineError> {
        let line = if self.json { summary.to_string() } else { human.to_owned() };
        writeln!(self.stdout, "{line}").map_err(io_at(Path::new("<stdout>")))
    }
}

fn fresh_dir(dir: &Path) -> Result<(), PipelineError> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(io_at(dir))?;
    }
    fs::create_dir_all(dir).map_err(io_at(dir))
}

fn write_text(path: &Path, body: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_at(parent))?;
    }
    fs::write(path, body).map_err(io_at(path))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

fn load_config(global: &GlobalArgs) -> Result<ToolkitConfig, PipelineError> {
    let mut cfg = match &global.config {
        Some(path) => ToolkitConfig::load(path)?,
        None => ToolkitConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &global.out {
        cfg.output = out.clone();
    }
    Ok(cfg)
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_cli_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_PIPELINE
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), PipelineError> {
    let cfg = load_config(&cli.global)?;
    let mut ctx = Ctx {
        out: cfg.output.clone(),
        cfg,
        json: cli.global.json,
        jobs: cli.global.jobs,
        stdout,
        stderr,
    };
    match cli.command {
        Command::Scan { corpus, sarif } => scan(&mut ctx, &corpus, sarif.as_deref()),
        Command::Detect { path } => detect(&mut ctx, &path),
        Command::Prevalence { corpus } => prevalence(&mut ctx, &corpus),
        Command::Codefects { corpus, sarif } => codefects(&mut ctx, &corpus, sarif.as_deref()),
        Command::BuildDataset {
            corpus,
            findings,
            sample_size,
        } => build_dataset(&mut ctx, &corpus, findings, sample_size),
        Command::Forge { kinds, dataset, pool } => forge(&mut ctx, kinds.as_deref(), dataset, pool),
        Command::Generate { backend, completions } => generate(&mut ctx, backend, completions),
        Command::Evaluate { backend, sarif } => evaluate(&mut ctx, backend, sarif.as_deref()),
        Command::Report => report(&mut ctx),
    }
}

fn scan(ctx: &mut Ctx, corpus: &Path, sarif: Option<&Path>) -> Result<(), PipelineError> {
    let dir = ctx.dir("scan");
    fresh_dir(&dir)?;
    let results = dir.join("results.sarif");
    let ingestion = match sarif {
        Some(path) => {
            fs::copy(path, &results).map_err(io_at(path))?;
            let root = corpus.canonicalize().unwrap_or_else(|_| corpus.to_owned());
            pl::read_sarif(path, Some(&root))?
        }
        None => {
            let files = ctx.corpus(corpus)?;
            pl::scan_files(&ctx.scanner()?, &files, &results)?
        }
    };
    pl::write_jsonl(&dir.join("findings.jsonl"), &ingestion.findings)?;
    pl::write_jsonl(&dir.join("skips.jsonl"), &ingestion.skips)?;
    let summary = json!({
        "findings": ingestion.findings.len(),
        "skipped_results": ingestion.skips.len(),
        "output": dir,
    });
    let human = format!("{} findings, {} results skipped -> {}", ingestion.findings.len(), ingestion.skips.len(), dir.display());
    ctx.emit(summary, &human)
}

fn detect(ctx: &mut Ctx, path: &Path) -> Result<(), PipelineError> {
    let detector = ctx.detector()?;
    let files = if path.is_dir() {
        ctx.corpus(path)?
    } else {
        let text = fs::read_to_string(path).map_err(io_at(path))?;
        vec![SourceFile::new(path, text)]
    };
    let mut blocks = Vec::new();
    for f in &files {
        let (_, verdicts) = pl::detect_file(&detector, f);
        blocks.extend(verdicts.into_iter().filter(|v| v.is_co()));
    }
    if ctx.json {
        let summary = json!({ "files": files.len(), "co_blocks": blocks });
        return ctx.emit(summary, "");
    }
    let mut human = String::new();
    for b in &blocks {
        human.push_str(&format!(
            "{}:{}-{}\tco_lines={}\t{}\n",
            b.file.display(),
            b.span.start_line(),
            b.span.end_line(),
            b.co_line_count,
            b.nontrivial_kind.as_deref().unwrap_or("-"),
        ));
    }
    human.push_str(&format!("{} commented-out code blocks in {} files", blocks.len(), files.len()));
    ctx.emit(Value::Null, &human)
}

fn prevalence(ctx: &mut Ctx, corpus: &Path) -> Result<(), PipelineError> {
    let detector = ctx.detector()?;
    let files = ctx.corpus(corpus)?;
    let report = prevalence_stats(&pl::analyze_files(&detector, &files))?;
    let dir = ctx.dir("prevalence");
    write_text(&dir.join("prevalence.csv"), &report.to_csv())?;
    write_text(&dir.join("prevalence.json"), &to_json(&report))?;
    write_text(&dir.join("prevalence.md"), &report.to_markdown())?;
    let human = report.to_markdown();
    ctx.emit(serde_json::to_value(&report).expect("serializes"), human.trim_end())
}

fn codefects(ctx: &mut Ctx, corpus: &Path, sarif: Option<&Path>) -> Result<(), PipelineError> {
    let detector = ctx.detector()?;
    let files = ctx.corpus(corpus)?;
    let repositories = pl::repository_count(&files);
    let uncommented = pl::uncomment_corpus(&detector, &files);
    let dir = ctx.dir("codefects");
    fresh_dir(&dir)?;
    let ingestion = match sarif {
        Some(path) => pl::read_sarif(path, None)?,
        None => pl::scan_files(&ctx.scanner()?, &uncommented.files, &dir.join("results.sarif"))?,
    };
    let (report, pool) = pl::co_defects(repositories, &uncommented, &ingestion.findings)?;
    write_text(&dir.join("report.csv"), &report.to_csv())?;
    write_text(&dir.join("report.md"), &report.to_markdown())?;
    write_text(&dir.join("report.json"), &to_json(&report))?;
    pl::write_jsonl(&dir.join("findings.jsonl"), &ingestion.findings)?;
    pl::write_jsonl(&dir.join("skips.jsonl"), &uncommented.skipped)?;
    let pool_path = dir.join("pool.jsonl");
    let pool_file = fs::File::create(&pool_path).map_err(io_at(&pool_path))?;
    pool.write_jsonl(io::BufWriter::new(pool_file)).map_err(io_at(&pool_path))?;
    let human = format!("{}pool: {} defect-free blocks", report.to_markdown(), pool.len());
    let summary = json!({ "report": report, "pool_blocks": pool.len(), "output": dir });
    ctx.emit(summary, &human)
}

fn build_dataset(ctx: &mut Ctx, corpus: &Path, findings: Option<PathBuf>, sample_size: Option<usize>) -> Result<(), PipelineError> {
    let findings_path = findings.unwrap_or_else(|| ctx.dir("scan").join("findings.jsonl"));
    require(&findings_path, "findings", "cotrap scan")?;
    let findings: Vec<DefectFinding> = pl::read_jsonl(&findings_path)?;
    let files = ctx.corpus(corpus)?;
    let sample_size = sample_size.or(ctx.cfg.sample_size);
    let build = pl::build_dataset(&files, &findings, ctx.cfg.dataset, sample_size, ctx.cfg.seed)?;
    for e in &build.excise_errors {
        writeln!(ctx.stderr, "{}", json!({ "excise_error": e })).map_err(io_at(Path::new("<stderr>")))?;
    }
    let dir = ctx.dir("dataset");
    fresh_dir(&dir)?;
    let header = ManifestHeader {
        format_version: 1,
        seed: ctx.cfg.seed,
        max_findings_per_file: ctx.cfg.dataset.max_findings_per_file,
        sample_size: build.samples.len(),
    };
    dataset::write_manifest(&build.samples, &dir, &header)?;
    let summary = json!({
        "excised": build.excised,
        "cleaned": build.cleaned,
        "samples": build.samples.len(),
        "excise_errors": build.excise_errors.len(),
        "output": dir,
    });
    let human = format!(
        "{} excised, {} after cleaning, {} sampled -> {}",
        build.excised,
        build.cleaned,
        build.samples.len(),
        dir.display()
    );
    ctx.emit(summary, &human)
}

fn forge(ctx: &mut Ctx, kinds: Option<&str>, dataset_dir: Option<PathBuf>, pool: Option<PathBuf>) -> Result<(), PipelineError> {
    let kinds = match kinds {
        Some(list) => parse_kinds(list)?,
        None => ctx.cfg.forge.kinds.clone(),
    };
    let dataset_dir = dataset_dir.unwrap_or_else(|| ctx.dir("dataset"));
    let manifest = dataset_dir.join(dataset::MANIFEST_FILE);
    require(&manifest, "dataset manifest", "cotrap build-dataset")?;
    let (_, samples) = dataset::read_manifest(&dataset_dir)?;
    let pool_path = pool
        .or_else(|| ctx.cfg.forge.random_pool.clone())
        .or_else(|| Some(ctx.dir("codefects").join("pool.jsonl")).filter(|p| p.exists()));
    let pool = match (&pool_path, kinds.contains(&VariantKind::RandomInsertion)) {
        (Some(path), true) => {
            let file = fs::File::open(path).map_err(io_at(path))?;
            Some(RandomPool::read_jsonl(io::BufReader::new(file)).map_err(io_at(path))?)
        }
        _ => None,
    };
    let suite = pl::forge_dataset(&samples, &kinds, &ctx.cfg.forge_options(), pool.as_ref());
    let dir = ctx.dir("prompts");
    fresh_dir(&dir)?;
    write_variants(&dir, &suite.variants)?;
    pl::write_jsonl(&dir.join("skips.jsonl"), &suite.skips)?;
    let summary = json!({
        "samples": samples.len(),
        "variants": suite.variants.len(),
        "skipped": suite.skips.len(),
        "output": dir,
    });
    let human = format!("{} variants ({} skipped) for {} samples -> {}", suite.variants.len(), suite.skips.len(), samples.len(), dir.display());
    ctx.emit(summary, &human)
}

fn backend_descriptor(ctx: &Ctx, id: Option<String>, completions: Option<PathBuf>) -> Result<BackendDescriptor, PipelineError> {
    let id = match id {
        Some(id) => id,
        None => match ctx.cfg.backends.as_slice() {
            [only] => only.id.clone(),
            [] if completions.is_none() => "null".into(),
            _ => return Err(PipelineError::Other("several backends configured; choose one with --backend".into())),
        },
    };
    if let Some(dir) = completions {
        return Ok(BackendDescriptor::replay(id, dir));
    }
    if let Some(d) = ctx.cfg.backends.iter().find(|b| b.id == id) {
        return Ok(d.clone());
    }
    if id == "null" {
        return Ok(BackendDescriptor::null(id));
    }
    Err(PipelineError::Other(format!("unknown backend {id:?}")))
}

fn generate(ctx: &mut Ctx, backend: Option<String>, completions: Option<PathBuf>) -> Result<(), PipelineError> {
    let desc = backend_descriptor(ctx, backend, completions)?;
    desc.validate()?;
    let prompts = ctx.dir("prompts");
    require(&prompts.join(crate::prompt::INDEX_FILE), "prompt index", "cotrap forge")?;
    let variants = crate::prompt::read_variants(&prompts)?;
    let backend = desc.build()?;
    let workers = ctx.jobs.map_or(desc.max_concurrency, |j| desc.max_concurrency.min(j.max(1)));
    let results = generate_all(&variants, backend.as_ref(), workers, &desc.retry);
    let dir = ctx.dir("generated");
    let backend_dir = dir.join(&desc.id);
    if backend_dir.exists() {
        fs::remove_dir_all(&backend_dir).map_err(io_at(&backend_dir))?;
    }
    write_generated(&dir, &results).map_err(io_at(&dir))?;
    let count = |s| results.iter().filter(|r| r.status == s).count();
    let (ok, empty, failed) = (
        count(generation::GenerationStatus::Ok),
        count(generation::GenerationStatus::Empty),
        count(generation::GenerationStatus::BackendError),
    );
    let summary = json!({
        "backend": desc.id,
        "variants": results.len(),
        "ok": ok,
        "empty": empty,
        "backend_error": failed,
        "output": backend_dir,
    });
    let human = format!("{}: {ok} ok, {empty} empty, {failed} failed -> {}", desc.id, backend_dir.display());
    ctx.emit(summary, &human)
}

fn evaluate(ctx: &mut Ctx, backend: Option<String>, sarif: Option<&Path>) -> Result<(), PipelineError> {
    let generated = ctx.dir("generated");
    require(&generated.join(generation::INDEX_FILE), "generation index", "cotrap generate")?;
    let entries = read_generated_index(&generated).map_err(io_at(&generated))?;
    let backend = match backend {
        Some(b) => b,
        None => {
            let mut ids: Vec<&str> = entries.iter().map(|e| e.backend.as_str()).collect();
            ids.dedup();
            match ids.as_slice() {
                [only] => only.to_string(),
                _ => return Err(PipelineError::Other("generation index holds several backends; choose one with --backend".into())),
            }
        }
    };
    let backend_dir = generated.join(&backend);
    require(&backend_dir, "generated files", "cotrap generate")?;
    let eval_dir = ctx.dir("evaluation");
    fs::create_dir_all(&eval_dir).map_err(io_at(&eval_dir))?;
    let ingestion = match sarif {
        Some(path) => {
            let root = backend_dir.canonicalize().map_err(io_at(&backend_dir))?;
            pl::read_sarif(path, Some(&root))?
        }
        None => pl::scan_dir(&ctx.scanner()?, &backend_dir, &eval_dir.join(format!("{backend}.sarif")))?,
    };
    let (_, samples) = dataset::read_manifest(&ctx.dir("dataset"))?;
    let variants = crate::prompt::read_variants(&ctx.dir("prompts"))?;
    let eval = pl::evaluate_backend(&backend, &samples, &variants, &entries, &ingestion.findings, &ctx.cfg.matching);

    let records_path = eval_dir.join("records.jsonl");
    let mut records: Vec<EvaluationRecord> = if records_path.exists() { pl::read_jsonl(&records_path)? } else { Vec::new() };
    records.retain(|r| r.backend != backend);
    records.extend(eval.records.iter().cloned());
    records.sort_by(|a, b| (&a.backend, a.sample_id, a.kind, a.offset).cmp(&(&b.backend, b.sample_id, b.kind, b.offset)));
    pl::write_jsonl(&records_path, &records)?;

    let hits = eval.records.iter().filter(|r| r.reintroduced).count();
    let summary = json!({
        "backend": backend,
        "records": eval.records.len(),
        "reintroduced": hits,
        "backend_errors": eval.backend_errors,
        "unmatched_entries": eval.unknown.len(),
        "output": records_path,
    });
    let human = format!(
        "{backend}: {hits}/{} reintroduced ({} generation failures excluded) -> {}",
        eval.records.len(),
        eval.backend_errors,
        records_path.display()
    );
    ctx.emit(summary, &human)
}

fn report(ctx: &mut Ctx) -> Result<(), PipelineError> {
    let records_path = ctx.dir("evaluation").join("records.jsonl");
    require(&records_path, "evaluation index", "cotrap evaluate")?;
    let records: Vec<EvaluationRecord> = pl::read_jsonl(&records_path)?;
    let bundle = tabulate(&records, ctx.cfg.matching)?;
    let dir = ctx.dir("report");
    fresh_dir(&dir)?;
    let written = bundle.write(&dir).map_err(io_at(&dir))?;
    let summary = json!({ "files": written, "output": dir, "report": bundle });
    let human = bundle.to_markdown();
    ctx.emit(summary, human.trim_end())
}
