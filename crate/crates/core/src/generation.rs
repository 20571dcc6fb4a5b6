//! Completions at the completion point, from replayed, HTTP, or null
//! backends, spliced back into whole files for scanning.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dataset::SampleId;
use crate::prompt::{InsertionOffset, PromptVariant, VariantKind};
use crate::source::LineSpan;
use crate::text::{is_blank, Lines};

pub const API_KEY_ENV: &str = "COTRAP_API_KEY";
pub const DEFAULT_WIRE_TEMPLATE: &str =
    r#"{"model": "{model}", "prompt": "{prefix}", "suffix": "{suffix}", "max_tokens": 256, "temperature": 0}"#;
pub const DEFAULT_RESPONSE_POINTER: &str = "/choices/0/text";
pub const INDEX_FILE: &str = "index.jsonl";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Replay,
    HttpCompletion,
    Null,
}

/// Retries after the first attempt, waiting `base_delay_ms * 2^i` before
/// retry `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 1000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1u64 << retry.min(20)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendDescriptor {
    pub id: String,
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "one")]
    pub max_concurrency: usize,
    #[serde(default = "default_request_timeout")]
    pub request_timeout_secs: u64,
    #[serde(default)]
    pub completions_dir: Option<PathBuf>,
    #[serde(default)]
    pub wire_template: Option<String>,
    #[serde(default)]
    pub response_pointer: Option<String>,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn one() -> usize {
    1
}

fn default_request_timeout() -> u64 {
    60
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BackendConfigError {
    #[error("backend id {0:?} must be non-empty and usable as a directory name")]
    BadId(String),
    #[error("backend {0}: http-completion needs both endpoint and model")]
    HttpIncomplete(String),
    #[error("backend {0}: replay needs completions_dir")]
    ReplayWithoutStore(String),
    #[error("backend {0}: max_concurrency must be positive")]
    ZeroConcurrency(String),
    #[error("backend {id}: cannot build http client: {reason}")]
    Client { id: String, reason: String },
}

impl BackendDescriptor {
    pub fn null(id: impl Into<String>) -> Self {
        BackendDescriptor {
            id: id.into(),
            kind: BackendKind::Null,
            endpoint: None,
            model: None,
            max_concurrency: 1,
            request_timeout_secs: default_request_timeout(),
            completions_dir: None,
            wire_template: None,
            response_pointer: None,
            retry: RetryPolicy::default(),
        }
    }

    pub fn replay(id: impl Into<String>, completions_dir: impl Into<PathBuf>) -> Self {
        BackendDescriptor {
            kind: BackendKind::Replay,
            completions_dir: Some(completions_dir.into()),
            ..BackendDescriptor::null(id)
        }
    }

    pub fn http(id: impl Into<String>, endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        BackendDescriptor {
            kind: BackendKind::HttpCompletion,
            endpoint: Some(endpoint.into()),
            model: Some(model.into()),
            ..BackendDescriptor::null(id)
        }
    }

    pub fn validate(&self) -> Result<(), BackendConfigError> {
        let id_ok = !self.id.is_empty() && !self.id.contains(['/', '\\']) && self.id != "." && self.id != "..";
        if !id_ok {
            return Err(BackendConfigError::BadId(self.id.clone()));
        }
        if self.max_concurrency == 0 {
            return Err(BackendConfigError::ZeroConcurrency(self.id.clone()));
        }
        match self.kind {
            BackendKind::HttpCompletion if self.endpoint.is_none() || self.model.is_none() => {
                Err(BackendConfigError::HttpIncomplete(self.id.clone()))
            }
            BackendKind::Replay if self.completions_dir.is_none() => Err(BackendConfigError::ReplayWithoutStore(self.id.clone())),
            _ => Ok(()),
        }
    }

    /// Instantiates the backend. HTTP backends read the credential from
    /// `COTRAP_API_KEY`.
    pub fn build(&self) -> Result<Box<dyn Backend>, BackendConfigError> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::Null => Box::new(NullBackend { id: self.id.clone() }),
            BackendKind::Replay => Box::new(ReplayBackend {
                id: self.id.clone(),
                dir: self.completions_dir.clone().expect("validated"),
            }),
            BackendKind::HttpCompletion => Box::new(HttpBackend::new(self, std::env::var(API_KEY_ENV).ok())?),
        })
    }
}

/// Identity of a variant across prompts, completions and generated files.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VariantKey {
    pub sample_id: SampleId,
    pub kind: VariantKind,
    pub offset: Option<InsertionOffset>,
}

impl VariantKey {
    pub fn of(variant: &PromptVariant) -> Self {
        VariantKey {
            sample_id: variant.sample_id,
            kind: variant.kind,
            offset: variant.offset,
        }
    }

    pub fn file_stem(&self) -> String {
        let offset = self.offset.map_or_else(|| "blank".to_owned(), |o| o.label());
        format!("{}__{}__{}", self.sample_id, self.kind, offset)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenerationRequest {
    pub key: VariantKey,
    pub prefix: String,
    pub suffix: String,
}

impl GenerationRequest {
    pub fn reassemble(&self) -> String {
        format!("{}{}", self.prefix, self.suffix)
    }
}

/// Splits the prompt at the start of the completion-point line.
pub fn assemble_fim(variant: &PromptVariant) -> GenerationRequest {
    let text = &variant.text;
    let cut = match variant.completion_point_in_prompt {
        0 | 1 => 0,
        cp => text.match_indices('\n').nth(cp - 2).map_or(text.len(), |(i, _)| i + 1),
    };
    GenerationRequest {
        key: VariantKey::of(variant),
        prefix: text[..cut].to_owned(),
        suffix: text[cut..].to_owned(),
    }
}

/// Inserts the completion's lines at the completion point, minus any
/// trailing blank lines. A completion with no code leaves the text
/// unchanged and yields no span.
pub fn splice(variant: &PromptVariant, completion: &str) -> (String, Option<LineSpan>) {
    let mut new: Vec<&str> = completion.split('\n').collect();
    while new.last().is_some_and(|l| is_blank(l)) {
        new.pop();
    }
    if new.is_empty() {
        return (variant.text.clone(), None);
    }
    let mut lines = Lines::parse_for_cursor(&variant.text, variant.completion_point_in_prompt);
    let at = variant.completion_point_in_prompt.clamp(1, lines.len() + 1);
    let span = LineSpan::with_len(at, new.len());
    lines.insert(at, new);
    (lines.render(), span)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackendFailure {
    pub transient: bool,
    pub message: String,
}

impl BackendFailure {
    pub fn transient(message: impl Into<String>) -> Self {
        BackendFailure {
            transient: true,
            message: message.into(),
        }
    }

    pub fn permanent(message: impl Into<String>) -> Self {
        BackendFailure {
            transient: false,
            message: message.into(),
        }
    }
}

pub trait Backend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &GenerationRequest) -> Result<String, BackendFailure>;
}

pub struct NullBackend {
    pub id: String,
}

impl Backend for NullBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, _: &GenerationRequest) -> Result<String, BackendFailure> {
        Ok(String::new())
    }
}

/// Serves completions captured elsewhere from
/// `<dir>/<sample_id>__<kind>__<offset>.txt`.
pub struct ReplayBackend {
    pub id: String,
    pub dir: PathBuf,
}

impl Backend for ReplayBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &GenerationRequest) -> Result<String, BackendFailure> {
        let path = self.dir.join(format!("{}.txt", request.key.file_stem()));
        fs::read_to_string(&path).map_err(|e| BackendFailure::permanent(format!("no replay entry {}: {e}", path.display())))
    }
}

/// Writes a replay store entry for `key` under `dir`.
pub fn write_replay_entry(dir: &Path, key: &VariantKey, completion: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{}.txt", key.file_stem())), completion)
}

pub struct HttpBackend {
    id: String,
    endpoint: String,
    model: String,
    template: String,
    pointer: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("id", &self.id)
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpBackend {
    pub fn new(desc: &BackendDescriptor, api_key: Option<String>) -> Result<Self, BackendConfigError> {
        desc.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(desc.request_timeout_secs))
            .build()
            .map_err(|e| BackendConfigError::Client {
                id: desc.id.clone(),
                reason: e.to_string(),
            })?;
        Ok(HttpBackend {
            id: desc.id.clone(),
            endpoint: desc.endpoint.clone().unwrap_or_default(),
            model: desc.model.clone().unwrap_or_default(),
            template: desc.wire_template.clone().unwrap_or_else(|| DEFAULT_WIRE_TEMPLATE.to_owned()),
            pointer: desc.response_pointer.clone().unwrap_or_else(|| DEFAULT_RESPONSE_POINTER.to_owned()),
            api_key,
            client,
        })
    }

    pub fn body(&self, request: &GenerationRequest) -> String {
        render_wire_template(&self.template, &request.prefix, &request.suffix, &self.model)
    }
}

fn json_escape(s: &str) -> String {
    let quoted = serde_json::to_string(s).expect("strings serialize");
    quoted[1..quoted.len() - 1].to_owned()
}

/// Substitutes `{prefix}`, `{suffix}` and `{model}` with JSON-escaped text
/// in one pass, so placeholder-like text inside the prompt stays literal.
pub fn render_wire_template(template: &str, prefix: &str, suffix: &str, model: &str) -> String {
    let mut out = String::with_capacity(template.len() + prefix.len() + suffix.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let hit = [("{prefix}", prefix), ("{suffix}", suffix), ("{model}", model)]
            .into_iter()
            .find(|(p, _)| tail.starts_with(p));
        match hit {
            Some((p, value)) => {
                out.push_str(&json_escape(value));
                rest = &tail[p.len()..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

impl Backend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &GenerationRequest) -> Result<String, BackendFailure> {
        let mut req = self
            .client
            .post(&self.endpoint)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(self.body(request));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| BackendFailure::transient(format!("request failed: {}", e.without_url())))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendFailure::transient(format!("reading response: {e}")))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(BackendFailure::transient(format!("http {status}")));
        }
        if !status.is_success() {
            return Err(BackendFailure::permanent(format!("http {status}")));
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| BackendFailure::permanent(format!("response is not JSON: {e}")))?;
        value
            .pointer(&self.pointer)
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| BackendFailure::permanent(format!("response has no string at {}", self.pointer)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationStatus {
    Ok,
    BackendError,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenerationResult {
    pub key: VariantKey,
    pub backend: String,
    pub completion: String,
    pub spliced: String,
    pub spliced_span: Option<LineSpan>,
    pub status: GenerationStatus,
    pub diagnostics: Option<String>,
    pub attempts: u32,
}

/// Asks `backend` for a completion, retrying transient failures.
pub fn generate(variant: &PromptVariant, backend: &dyn Backend, retry: &RetryPolicy) -> GenerationResult {
    let request = assemble_fim(variant);
    let mut attempts = 0;
    let outcome = loop {
        attempts += 1;
        match backend.complete(&request) {
            Err(f) if f.transient && attempts <= retry.max_retries => thread::sleep(retry.delay(attempts - 1)),
            other => break other,
        }
    };
    let (completion, status, diagnostics) = match outcome {
        Ok(c) if c.trim().is_empty() => (c, GenerationStatus::Empty, None),
        Ok(c) => (c, GenerationStatus::Ok, None),
        Err(f) => (String::new(), GenerationStatus::BackendError, Some(format!("after {attempts} attempt(s): {}", f.message))),
    };
    let (spliced, spliced_span) = splice(variant, &completion);
    GenerationResult {
        key: request.key,
        backend: backend.id().to_owned(),
        completion,
        spliced,
        spliced_span,
        status,
        diagnostics,
        attempts,
    }
}

/// Generates for every variant with at most `max_concurrency` requests in
/// flight, handing out work in input order. Results are sorted by key.
pub fn generate_all(
    variants: &[PromptVariant],
    backend: &dyn Backend,
    max_concurrency: usize,
    retry: &RetryPolicy,
) -> Vec<GenerationResult> {
    let next = AtomicUsize::new(0);
    let sink = Mutex::new(Vec::with_capacity(variants.len()));
    let workers = max_concurrency.max(1).min(variants.len().max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(v) = variants.get(i) else { break };
                let r = generate(v, backend, retry);
                sink.lock().expect("sink lock").push(r);
            });
        }
    });
    let mut results = sink.into_inner().expect("sink lock");
    results.sort_by(|a, b| a.key.cmp(&b.key));
    results
}

/// One line of `generated/index.jsonl`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedEntry {
    pub backend: String,
    pub sample_id: SampleId,
    pub kind: VariantKind,
    pub offset: Option<InsertionOffset>,
    /// Relative to the `generated/` directory.
    pub file: PathBuf,
    pub status: GenerationStatus,
    pub spliced_span: Option<LineSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
}

impl GeneratedEntry {
    pub fn key(&self) -> VariantKey {
        VariantKey {
            sample_id: self.sample_id,
            kind: self.kind,
            offset: self.offset,
        }
    }
}

/// Writes spliced files to `<dir>/<backend>/<key>.py` and merges their
/// entries into `<dir>/index.jsonl`, replacing earlier entries of the same
/// backend.
pub fn write_generated(dir: &Path, results: &[GenerationResult]) -> io::Result<Vec<GeneratedEntry>> {
    let mut entries: Vec<GeneratedEntry> = match read_generated_index(dir) {
        Ok(existing) => existing,
        Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e),
    };
    let backends: std::collections::HashSet<&str> = results.iter().map(|r| r.backend.as_str()).collect();
    entries.retain(|e| !backends.contains(e.backend.as_str()));
    for r in results {
        let file = PathBuf::from(&r.backend).join(format!("{}.py", r.key.file_stem()));
        let path = dir.join(&file);
        fs::create_dir_all(path.parent().expect("has parent"))?;
        fs::write(&path, &r.spliced)?;
        entries.push(GeneratedEntry {
            backend: r.backend.clone(),
            sample_id: r.key.sample_id,
            kind: r.key.kind,
            offset: r.key.offset,
            file,
            status: r.status,
            spliced_span: r.spliced_span,
            diagnostics: r.diagnostics.clone(),
        });
    }
    entries.sort_by(|a, b| (&a.backend, a.key()).cmp(&(&b.backend, b.key())));
    let mut out = BufWriter::new(fs::File::create(dir.join(INDEX_FILE))?);
    for e in &entries {
        serde_json::to_writer(&mut out, e).map_err(io::Error::other)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(entries)
}

pub fn read_generated_index(dir: &Path) -> io::Result<Vec<GeneratedEntry>> {
    let file = fs::File::open(dir.join(INDEX_FILE))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(io::Error::other)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Read;
    use std::net::TcpListener;

    fn variant(text: &str, cp: usize) -> PromptVariant {
        PromptVariant {
            sample_id: SampleId(1),
            kind: VariantKind::Blank,
            offset: None,
            text: text.into(),
            inserted_span: None,
            completion_point_in_prompt: cp,
            instruction_line: None,
        }
    }

    #[test]
    fn fim_boundaries() {
        let r = assemble_fim(&variant("a\nb\nc\n", 1));
        assert_eq!((r.prefix.as_str(), r.suffix.as_str()), ("", "a\nb\nc\n"));
        let r = assemble_fim(&variant("a\nb\nc\n", 4));
        assert_eq!((r.prefix.as_str(), r.suffix.as_str()), ("a\nb\nc\n", ""));
        let r = assemble_fim(&variant("a\nb\nc", 4));
        assert_eq!((r.prefix.as_str(), r.suffix.as_str()), ("a\nb\nc", ""));
        let r = assemble_fim(&variant("a\nb\nc\n", 2));
        assert_eq!((r.prefix.as_str(), r.suffix.as_str()), ("a\n", "b\nc\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn fim_and_splice_round_trip(lines in proptest::collection::vec("[a-z ]{0,6}", 0..12), trailing in any::<bool>(), cp in 1usize..14, comp in "[a-z\n]{0,12}") {
            let mut text = lines.join("\n");
            if trailing && !text.is_empty() { text.push('\n'); }
            let n = Lines::parse(&text).len();
            let v = variant(&text, cp.min(n + 1));
            prop_assert_eq!(assemble_fim(&v).reassemble(), text.clone());
            let (spliced, span) = splice(&v, &comp);
            match span {
                None => prop_assert_eq!(spliced, text),
                Some(span) => {
                    let mut l = Lines::parse(&spliced);
                    l.remove(span.start_line(), span.end_line());
                    prop_assert_eq!(l.render(), text);
                }
            }
        }
    }

    #[test]
    fn splice_four_lines_at_twelve() {
        let text: String = (1..=20).map(|i| format!("l{i}\n")).collect();
        let (_, span) = splice(&variant(&text, 12), "a\nb\nc\nd\n");
        assert_eq!(span, LineSpan::new(12, 15));
    }

    #[test]
    fn null_backend_leaves_text() {
        let v = variant("x = 1\n", 2);
        let r = generate(&v, &NullBackend { id: "null".into() }, &RetryPolicy::default());
        assert_eq!(r.status, GenerationStatus::Empty);
        assert_eq!(r.spliced, v.text);
        assert_eq!(r.spliced_span, None);
    }

    #[test]
    fn replay_backend_and_missing_entry() {
        let dir = tempfile::tempdir().unwrap();
        let v = variant("x = 1\n", 2);
        write_replay_entry(dir.path(), &VariantKey::of(&v), "y = 2\n").unwrap();
        let b = ReplayBackend { id: "r".into(), dir: dir.path().into() };
        let r = generate(&v, &b, &RetryPolicy::default());
        assert_eq!((r.status, r.completion.as_str()), (GenerationStatus::Ok, "y = 2\n"));
        let mut other = v.clone();
        other.sample_id = SampleId(2);
        let r = generate(&other, &b, &RetryPolicy::default());
        assert_eq!(r.status, GenerationStatus::BackendError);
        assert_eq!(r.attempts, 1);
    }

    struct Flaky {
        failures: AtomicUsize,
    }

    impl Backend for Flaky {
        fn id(&self) -> &str {
            "flaky"
        }
        fn complete(&self, _: &GenerationRequest) -> Result<String, BackendFailure> {
            if self.failures.fetch_sub(1, Ordering::SeqCst) > 0 {
                Err(BackendFailure::transient("busy"))
            } else {
                Ok("done".into())
            }
        }
    }

    #[test]
    fn transient_failures_are_retried() {
        let fast = RetryPolicy { max_retries: 3, base_delay_ms: 1 };
        let v = variant("a\n", 1);
        let r = generate(&v, &Flaky { failures: AtomicUsize::new(3) }, &fast);
        assert_eq!((r.status, r.attempts), (GenerationStatus::Ok, 4));
        let r = generate(&v, &Flaky { failures: AtomicUsize::new(4) }, &fast);
        assert_eq!((r.status, r.attempts), (GenerationStatus::BackendError, 4));
        assert_eq!(RetryPolicy::default().delay(2), Duration::from_secs(4));
    }

    struct Gauge {
        live: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Backend for Gauge {
        fn id(&self) -> &str {
            "gauge"
        }
        fn complete(&self, _: &GenerationRequest) -> Result<String, BackendFailure> {
            let now = self.live.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            thread::sleep(Duration::from_millis(5));
            self.live.fetch_sub(1, Ordering::SeqCst);
            Ok("z\n".into())
        }
    }

    #[test]
    fn pool_respects_bound_and_orders_results() {
        let variants: Vec<_> = (0..24)
            .rev()
            .map(|i| PromptVariant { sample_id: SampleId(i), ..variant("a\n", 1) })
            .collect();
        let gauge = Gauge { live: AtomicUsize::new(0), peak: AtomicUsize::new(0) };
        let results = generate_all(&variants, &gauge, 3, &RetryPolicy::default());
        assert!(gauge.peak.load(Ordering::SeqCst) <= 3);
        assert!(gauge.peak.load(Ordering::SeqCst) >= 2);
        let ids: Vec<u32> = results.iter().map(|r| r.key.sample_id.0).collect();
        assert_eq!(ids, (0..24).collect::<Vec<_>>());
    }

    #[test]
    fn wire_template_escapes_once() {
        let body = render_wire_template(DEFAULT_WIRE_TEMPLATE, "a \"q\"\n{suffix}", "b", "m");
        let v: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["prompt"], "a \"q\"\n{suffix}");
        assert_eq!(v["suffix"], "b");
        assert_eq!(v["model"], "m");
    }

    fn stub_server(responses: Vec<(u16, &'static str)>) -> (String, thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
        let handle = thread::spawn(move || {
            let mut seen = Vec::new();
            for (code, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = Vec::new();
                let mut chunk = [0u8; 4096];
                loop {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                    let text = String::from_utf8_lossy(&buf);
                    if let Some(head_end) = text.find("\r\n\r\n") {
                        let len = text[..head_end]
                            .lines()
                            .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                            .unwrap_or(0);
                        if buf.len() >= head_end + 4 + len {
                            break;
                        }
                    }
                    if n == 0 {
                        break;
                    }
                }
                seen.push(String::from_utf8_lossy(&buf).into_owned());
                let reply = format!("HTTP/1.1 {code} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len());
                stream.write_all(reply.as_bytes()).unwrap();
            }
            seen
        });
        (url, handle)
    }

    #[test]
    fn http_backend_against_stub() {
        let (url, server) = stub_server(vec![(503, "{}"), (200, r#"{"choices": [{"text": "fixed()\n"}]}"#)]);
        let desc = BackendDescriptor {
            retry: RetryPolicy { max_retries: 3, base_delay_ms: 1 },
            ..BackendDescriptor::http("stub", url, "m1")
        };
        let backend = HttpBackend::new(&desc, Some("sekret".into())).unwrap();
        assert!(!format!("{backend:?}").contains("sekret"));
        let r = generate(&variant("a = 1\n", 2), &backend, &desc.retry);
        assert_eq!(r.status, GenerationStatus::Ok);
        assert_eq!(r.completion, "fixed()\n");
        assert_eq!(r.attempts, 2);
        let seen = server.join().unwrap();
        assert!(seen[1].to_ascii_lowercase().contains("authorization: bearer sekret"));
        assert!(seen[1].contains(r#""prompt": "a = 1\n""#));
    }

    #[test]
    fn descriptor_validation() {
        assert!(BackendDescriptor::null("n").validate().is_ok());
        let mut http = BackendDescriptor::http("h", "http://x", "m");
        http.model = None;
        assert_eq!(http.validate(), Err(BackendConfigError::HttpIncomplete("h".into())));
        let mut replay = BackendDescriptor::replay("r", "d");
        replay.completions_dir = None;
        assert!(replay.validate().is_err());
        assert!(BackendDescriptor::null("a/b").validate().is_err());
    }

    #[test]
    fn generated_index_merges_backends() {
        let dir = tempfile::tempdir().unwrap();
        let v = variant("a\n", 1);
        let a = generate(&v, &NullBackend { id: "a".into() }, &RetryPolicy::default());
        let b = generate(&v, &NullBackend { id: "b".into() }, &RetryPolicy::default());
        write_generated(dir.path(), std::slice::from_ref(&a)).unwrap();
        write_generated(dir.path(), &[b]).unwrap();
        let entries = write_generated(dir.path(), &[a]).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(read_generated_index(dir.path()).unwrap(), entries);
        assert!(dir.path().join("a/000001__blank__blank.py").is_file());
    }
}
