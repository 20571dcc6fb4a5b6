use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tempfile::TempDir;
use wait_timeout::ChildExt;

const INPUT_DIR: &str = "{input_dir}";
const OUTPUT_FILE: &str = "{output_file}";

/// How to invoke the external defect scanner.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScannerConfig {
    /// Command line with `{input_dir}` and `{output_file}` placeholders,
    /// split with POSIX shell quoting rules (no shell is involved).
    pub command: String,
    #[serde(default)]
    pub ruleset_id: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_concurrency")]
    pub max_concurrent: usize,
}

fn default_timeout() -> u64 {
    1800
}

fn default_concurrency() -> usize {
    1
}

#[derive(Debug, thiserror::Error)]
pub enum ScannerError {
    #[error("scanner command template must contain {placeholder} exactly once (found {found})")]
    Template { placeholder: &'static str, found: usize },
    #[error("scanner command template could not be split into arguments")]
    Unsplittable,
    #[error("snapshot directory {0} does not exist")]
    MissingSnapshot(PathBuf),
    #[error("failed to start scanner {program:?}: {source}")]
    Spawn { program: String, source: io::Error },
    #[error("scanner exited with code {code:?}\n{diagnostics}")]
    NonZeroExit { code: Option<i32>, diagnostics: String },
    #[error("scanner timed out after {secs}s\n{diagnostics}")]
    Timeout { secs: u64, diagnostics: String },
    #[error("scanner finished but wrote no output at {path}\n{diagnostics}")]
    MissingOutput { path: PathBuf, diagnostics: String },
    #[error("scanner i/o: {0}")]
    Io(#[from] io::Error),
}

impl ScannerConfig {
    pub fn new(command: impl Into<String>) -> Self {
        ScannerConfig {
            command: command.into(),
            ruleset_id: String::new(),
            timeout_secs: default_timeout(),
            max_concurrent: default_concurrency(),
        }
    }

    pub fn validate(&self) -> Result<(), ScannerError> {
        for placeholder in [INPUT_DIR, OUTPUT_FILE] {
            let found = self.command.matches(placeholder).count();
            if found != 1 {
                return Err(ScannerError::Template { placeholder, found });
            }
        }
        shlex::split(&self.command).filter(|a| !a.is_empty()).ok_or(ScannerError::Unsplittable)?;
        Ok(())
    }

    fn argv(&self, input_dir: &Path, output_file: &Path) -> Result<Vec<String>, ScannerError> {
        self.validate()?;
        let input = input_dir.to_string_lossy();
        let output = output_file.to_string_lossy();
        Ok(shlex::split(&self.command)
            .ok_or(ScannerError::Unsplittable)?
            .into_iter()
            .map(|arg| arg.replace(INPUT_DIR, &input).replace(OUTPUT_FILE, &output))
            .collect())
    }
}

fn diagnostics(stdout: &Path, stderr: &Path) -> String {
    let read = |p: &Path| fs::read_to_string(p).unwrap_or_default();
    let mut out = String::new();
    for (label, text) in [("stdout", read(stdout)), ("stderr", read(stderr))] {
        let text = text.trim();
        if !text.is_empty() {
            out.push_str(&format!("[{label}] {text}\n"));
        }
    }
    out
}

/// Runs the scanner over `snapshot_dir`, writing SARIF to `output_file`.
pub fn run_external_scanner(
    config: &ScannerConfig,
    snapshot_dir: &Path,
    output_file: &Path,
) -> Result<PathBuf, ScannerError> {
    if !snapshot_dir.is_dir() {
        return Err(ScannerError::MissingSnapshot(snapshot_dir.to_owned()));
    }
    let argv = config.argv(snapshot_dir, output_file)?;
    if let Some(parent) = output_file.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let logs = TempDir::new()?;
    let (out_log, err_log) = (logs.path().join("stdout"), logs.path().join("stderr"));
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(fs::File::create(&out_log)?)
        .stderr(fs::File::create(&err_log)?)
        .spawn()
        .map_err(|source| ScannerError::Spawn {
            program: argv[0].clone(),
            source,
        })?;
    let status = match child.wait_timeout(Duration::from_secs(config.timeout_secs))? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ScannerError::Timeout {
                secs: config.timeout_secs,
                diagnostics: diagnostics(&out_log, &err_log),
            });
        }
    };
    if !status.success() {
        return Err(ScannerError::NonZeroExit {
            code: status.code(),
            diagnostics: diagnostics(&out_log, &err_log),
        });
    }
    if !output_file.is_file() {
        return Err(ScannerError::MissingOutput {
            path: output_file.to_owned(),
            diagnostics: diagnostics(&out_log, &err_log),
        });
    }
    Ok(output_file.to_owned())
}

/// A scanner invocation over one snapshot.
#[derive(Clone, Debug)]
pub struct ScanJob {
    pub snapshot_dir: PathBuf,
    pub output_file: PathBuf,
}

/// Runs jobs with at most `config.max_concurrent` scanner processes alive;
/// results are returned in job order.
pub fn run_scanners_bounded(config: &ScannerConfig, jobs: &[ScanJob]) -> Vec<Result<PathBuf, ScannerError>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<PathBuf, ScannerError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let workers = config.max_concurrent.max(1).min(jobs.len().max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                let r = run_external_scanner(config, &job.snapshot_dir, &job.output_file);
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// A private copy of files for a scanner to read, removed on drop.
#[derive(Debug)]
pub struct Snapshot {
    dir: TempDir,
}

impl Snapshot {
    pub fn from_files<'a, I>(files: I) -> io::Result<Snapshot>
    where
        I: IntoIterator<Item = (&'a Path, &'a str)>,
    {
        let dir = TempDir::new()?;
        for (rel, text) in files {
            let dest = dir.path().join(rel);
            if let Some(parent) = dest.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(dest, text)?;
        }
        Ok(Snapshot { dir })
    }

    /// Copies every regular file under `src`.
    pub fn copy_dir(src: &Path) -> io::Result<Snapshot> {
        let dir = TempDir::new()?;
        for entry in walkdir::WalkDir::new(src) {
            let entry = entry.map_err(io::Error::other)?;
            let rel = entry.path().strip_prefix(src).expect("walk stays under root");
            let dest = dir.path().join(rel);
            if entry.file_type().is_dir() {
                fs::create_dir_all(&dest)?;
            } else if entry.file_type().is_file() {
                fs::copy(entry.path(), &dest)?;
            }
        }
        Ok(Snapshot { dir })
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }
}
