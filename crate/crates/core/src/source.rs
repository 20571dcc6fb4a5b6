//! Source files, line spans, comment blocks, and corpus enumeration.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::text::line_count;

/// A 1-based inclusive line range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpan")]
pub struct LineSpan {
    start_line: usize,
    end_line: usize,
}

#[derive(Deserialize)]
struct RawSpan {
    start_line: usize,
    end_line: usize,
}

impl TryFrom<RawSpan> for LineSpan {
    type Error = String;

    fn try_from(raw: RawSpan) -> Result<Self, Self::Error> {
        LineSpan::new(raw.start_line, raw.end_line)
            .ok_or_else(|| format!("invalid line span {}..{}", raw.start_line, raw.end_line))
    }
}

impl LineSpan {
    /// Returns `None` unless `1 <= start_line <= end_line`.
    pub fn new(start_line: usize, end_line: usize) -> Option<Self> {
        (start_line >= 1 && start_line <= end_line).then_some(LineSpan { start_line, end_line })
    }

    /// Span of `len` lines starting at `start_line`; `None` for `len == 0`.
    pub fn with_len(start_line: usize, len: usize) -> Option<Self> {
        LineSpan::new(start_line, (start_line + len).checked_sub(1)?)
    }

    pub fn start_line(self) -> usize {
        self.start_line
    }

    pub fn end_line(self) -> usize {
        self.end_line
    }

    pub fn len(self) -> usize {
        self.end_line - self.start_line + 1
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn contains(self, line: usize) -> bool {
        (self.start_line..=self.end_line).contains(&line)
    }

    pub fn intersects(self, other: LineSpan) -> bool {
        self.start_line <= other.end_line && other.start_line <= self.end_line
    }

    /// Widens the span by `margin` lines on both sides, clamped at line 1.
    pub fn widened(self, margin: usize) -> LineSpan {
        LineSpan {
            start_line: self.start_line.saturating_sub(margin).max(1),
            end_line: self.end_line + margin,
        }
    }
}

impl std::fmt::Display for LineSpan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.start_line, self.end_line)
    }
}

/// One source file of a corpus, addressed by its corpus-relative path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceFile {
    pub path: PathBuf,
    pub text: String,
    line_count: usize,
}

impl SourceFile {
    pub fn new(path: impl Into<PathBuf>, text: impl Into<String>) -> Self {
        let text = text.into();
        SourceFile {
            path: path.into(),
            line_count: line_count(&text),
            text,
        }
    }

    pub fn line_count(&self) -> usize {
        self.line_count
    }
}

/// A maximal run of full-line `#` comments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentBlock {
    pub file: PathBuf,
    pub span: LineSpan,
    pub lines: Vec<String>,
}

impl CommentBlock {
    pub fn line_count(&self) -> usize {
        self.lines.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StringState {
    Code,
    Single(char),
    Triple(char),
}

/// Classifies every line as full-line comment or not, tracking string
/// literal state across lines so `#` inside docstrings is never a comment.
fn full_line_comment_mask(text: &str) -> Vec<bool> {
    let mut state = StringState::Code;
    let mut mask = Vec::new();
    for line in text.split('\n') {
        let trimmed = line.trim_start();
        mask.push(state == StringState::Code && trimmed.starts_with('#'));
        state = scan_line(line, state);
    }
    if text.ends_with('\n') || text.is_empty() {
        mask.pop();
    }
    mask
}

fn scan_line(line: &str, mut state: StringState) -> StringState {
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match state {
            StringState::Code => {
                if c == '#' {
                    return StringState::Code;
                }
                if c == '"' || c == '\'' {
                    if chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c) {
                        state = StringState::Triple(c);
                        i += 2;
                    } else {
                        state = StringState::Single(c);
                    }
                }
            }
            StringState::Single(q) => {
                if c == '\\' {
                    if i + 1 == chars.len() {
                        // escaped newline keeps the literal open
                        return state;
                    }
                    i += 1;
                } else if c == q {
                    state = StringState::Code;
                }
            }
            StringState::Triple(q) => {
                if c == '\\' {
                    i += 1;
                } else if c == q && chars.get(i + 1) == Some(&q) && chars.get(i + 2) == Some(&q) {
                    state = StringState::Code;
                    i += 2;
                }
            }
        }
        i += 1;
    }
    match state {
        // an unterminated single-quoted literal ends at the newline
        StringState::Single(_) => StringState::Code,
        other => other,
    }
}

fn is_directive(line_number: usize, line: &str) -> bool {
    let trimmed = line.trim_start();
    if line_number == 1 && line.starts_with("#!") {
        return true;
    }
    line_number <= 2 && trimmed.starts_with('#') && declares_encoding(trimmed)
}

fn declares_encoding(comment: &str) -> bool {
    comment.match_indices("coding").any(|(at, _)| {
        let rest = &comment[at + "coding".len()..];
        let mut chars = rest.chars();
        matches!(chars.next(), Some(':') | Some('='))
            && chars
                .as_str()
                .trim_start_matches([' ', '\t'])
                .starts_with(|c: char| c.is_alphanumeric() || c == '-' || c == '_' || c == '.')
    })
}

/// All maximal runs of full-line comments in ascending line order.
pub fn extract_comment_blocks(file: &SourceFile) -> Vec<CommentBlock> {
    let mask = full_line_comment_mask(&file.text);
    let lines: Vec<&str> = file.text.split('\n').collect();
    let mut blocks = Vec::new();
    let mut current: Option<(usize, Vec<String>)> = None;
    for (idx, &is_comment) in mask.iter().enumerate() {
        let number = idx + 1;
        let line = lines[idx];
        if is_comment && !is_directive(number, line) {
            current.get_or_insert_with(|| (number, Vec::new())).1.push(line.to_owned());
        } else if let Some((start, run)) = current.take() {
            blocks.push(make_block(file, start, run));
        }
    }
    if let Some((start, run)) = current {
        blocks.push(make_block(file, start, run));
    }
    blocks
}

fn make_block(file: &SourceFile, start: usize, lines: Vec<String>) -> CommentBlock {
    CommentBlock {
        file: file.path.clone(),
        span: LineSpan::with_len(start, lines.len()).expect("non-empty run"),
        lines,
    }
}

/// Which files of a directory tree belong to the corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusFilter {
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    pub min_bytes: u64,
    pub max_bytes: Option<u64>,
}

impl Default for CorpusFilter {
    fn default() -> Self {
        CorpusFilter {
            include: vec!["**/*.py".into()],
            exclude: Vec::new(),
            min_bytes: 0,
            max_bytes: None,
        }
    }
}

/// A file left out of the corpus and why.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub path: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct CorpusListing {
    pub files: Vec<SourceFile>,
    pub skips: Vec<SkipRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus root {path} is not readable: {source}")]
    UnreadableRoot { path: PathBuf, source: io::Error },
    #[error("invalid glob pattern {pattern:?}: {source}")]
    BadGlob { pattern: String, source: globset::Error },
}

fn glob_set(patterns: &[String]) -> Result<GlobSet, CorpusError> {
    let mut builder = GlobSetBuilder::new();
    for pattern in patterns {
        let glob = Glob::new(pattern).map_err(|source| CorpusError::BadGlob {
            pattern: pattern.clone(),
            source,
        })?;
        builder.add(glob);
    }
    builder.build().map_err(|source| CorpusError::BadGlob {
        pattern: patterns.join(","),
        source,
    })
}

fn relative_key(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Lists the corpus files under `root`, sorted by relative path.
pub fn enumerate_corpus(root: &Path, filter: &CorpusFilter) -> Result<CorpusListing, CorpusError> {
    fs::read_dir(root).map_err(|source| CorpusError::UnreadableRoot {
        path: root.to_owned(),
        source,
    })?;
    let include = glob_set(&filter.include)?;
    let exclude = glob_set(&filter.exclude)?;

    let mut listing = CorpusListing::default();
    let walker = WalkDir::new(root).follow_links(false).into_iter().filter_entry(|entry| {
        entry.depth() == 0 || !entry.file_type().is_dir() || !exclude.is_match(relative_key(root, entry.path()))
    });
    for entry in walker {
        let entry = match entry {
            Ok(entry) => entry,
            Err(err) => {
                let path = err.path().map(|p| relative_key(root, p)).unwrap_or_default();
                listing.skips.push(SkipRecord {
                    path,
                    reason: format!("unreadable: {err}"),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let key = relative_key(root, entry.path());
        if !include.is_match(&key) || exclude.is_match(&key) {
            continue;
        }
        match load_file(entry.path(), &key, filter) {
            Ok(file) => listing.files.push(file),
            Err(reason) => listing.skips.push(SkipRecord { path: key, reason }),
        }
    }
    listing.files.sort_by(|a, b| a.path.cmp(&b.path));
    listing.skips.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(listing)
}

fn load_file(path: &Path, key: &str, filter: &CorpusFilter) -> Result<SourceFile, String> {
    let size = fs::metadata(path).map_err(|e| format!("unreadable: {e}"))?.len();
    let too_big = filter.max_bytes.is_some_and(|max| size > max);
    if size < filter.min_bytes || too_big {
        let max = filter.max_bytes.map_or_else(|| "inf".to_owned(), |m| m.to_string());
        return Err(format!("size {size} bytes outside [{}, {max}]", filter.min_bytes));
    }
    let bytes = fs::read(path).map_err(|e| format!("unreadable: {e}"))?;
    let text = String::from_utf8(bytes).map_err(|_| "not valid UTF-8".to_owned())?;
    Ok(SourceFile::new(key, text))
}

/// Writes one `{path, reason}` JSON object per line.
pub fn write_skip_log<W: Write>(mut out: W, skips: &[SkipRecord]) -> io::Result<()> {
    for skip in skips {
        serde_json::to_writer(&mut out, skip)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
