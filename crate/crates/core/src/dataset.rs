//! Dataset samples: a defect excised from its file, commented out, and
//! paired with the remaining code context and the completion point.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::defects::{DefectCategory, DefectFinding};
use crate::detector::uncomment_line;
use crate::source::{LineSpan, SourceFile};
use crate::text::{indentation, Lines};

pub const DEFAULT_SEED: u64 = 1903;
pub const DEFAULT_MAX_FINDINGS_PER_FILE: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("finding span {span} is outside {path} ({lines} lines)")]
    SpanOutOfRange { path: PathBuf, span: LineSpan, lines: usize },
    #[error("finding span {span} covers all of {path}; no code context would remain")]
    NoContext { path: PathBuf, span: LineSpan },
    #[error("requested {requested} samples but only {available} are available")]
    NotEnoughSamples { requested: usize, available: usize },
    #[error("file name {0:?} does not follow <id>__<category>__<rule>__L<line>.py")]
    BadFilename(String),
    #[error("sample {sample_id}: {reason}")]
    Manifest { sample_id: String, reason: String },
    #[error("manifest line {line}: {reason}")]
    ManifestSyntax { line: usize, reason: String },
    #[error("dataset i/o at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Zero-padded numeric sample identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SampleId(pub u32);

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:06}", self.0)
    }
}

impl FromStr for SampleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("sample id {s:?} is not a zero-padded integer"));
        }
        s.parse().map(SampleId).map_err(|e| e.to_string())
    }
}

impl Serialize for SampleId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SampleId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectInfo {
    pub rule_id: String,
    pub category: DefectCategory,
    pub cwe: Option<String>,
    pub original_span: LineSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSample {
    pub sample_id: SampleId,
    pub source_path: PathBuf,
    /// The source file with the defective lines removed.
    pub context: String,
    /// The defective lines, commented out, joined with `\n`.
    pub co_block: String,
    /// 1-based line of the context where the defect began.
    pub completion_point: usize,
    pub defect: DefectInfo,
}

impl DatasetSample {
    pub fn co_lines(&self) -> Vec<&str> {
        self.co_block.split('\n').collect()
    }

    /// The original defective lines.
    pub fn defective_lines(&self) -> Vec<String> {
        self.co_lines().iter().map(|l| uncomment_line(l)).collect()
    }

    pub fn metadata(&self) -> SampleMetadata {
        SampleMetadata {
            sample_id: self.sample_id,
            category: self.defect.category,
            rule_slug: rule_slug(&self.defect.rule_id),
            completion_line: self.completion_point,
        }
    }
}

/// Inserts `# ` after the indentation; whitespace-only lines get a bare `#`.
pub fn comment_out_line(line: &str) -> String {
    let indent = indentation(line);
    let body = &line[indent.len()..];
    if body.is_empty() {
        format!("{indent}#")
    } else {
        format!("{indent}# {body}")
    }
}

/// Cuts the finding's lines out of `file`.
pub fn excise(file: &SourceFile, finding: &DefectFinding, sample_id: SampleId) -> Result<DatasetSample, DatasetError> {
    let mut lines = Lines::parse(&file.text);
    let span = finding.span;
    if span.end_line() > lines.len() {
        return Err(DatasetError::SpanOutOfRange {
            path: file.path.clone(),
            span,
            lines: lines.len(),
        });
    }
    if span.len() == lines.len() {
        return Err(DatasetError::NoContext {
            path: file.path.clone(),
            span,
        });
    }
    let removed = lines.remove(span.start_line(), span.end_line());
    Ok(DatasetSample {
        sample_id,
        source_path: file.path.clone(),
        context: lines.render(),
        co_block: removed.iter().map(|l| comment_out_line(l)).collect::<Vec<_>>().join("\n"),
        completion_point: span.start_line(),
        defect: DefectInfo {
            rule_id: finding.rule_id.clone(),
            category: finding.category,
            cwe: finding.cwe.clone(),
            original_span: span,
        },
    })
}

/// Uncomments the CO block back into the context at the completion point.
pub fn restore(sample: &DatasetSample) -> String {
    let mut lines = Lines::parse_for_cursor(&sample.context, sample.completion_point);
    lines.insert(sample.completion_point, sample.defective_lines());
    lines.render()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CleanOptions {
    pub max_findings_per_file: usize,
}

impl Default for CleanOptions {
    fn default() -> Self {
        CleanOptions {
            max_findings_per_file: DEFAULT_MAX_FINDINGS_PER_FILE,
        }
    }
}

/// Drops files with overlapping findings on a line or with too many
/// findings, then drops samples whose context duplicates an earlier one
/// (ordered by source path and completion point).
pub fn clean(samples: Vec<DatasetSample>, options: CleanOptions) -> Vec<DatasetSample> {
    let mut by_file: HashMap<&Path, Vec<&DatasetSample>> = HashMap::new();
    for s in &samples {
        by_file.entry(s.source_path.as_path()).or_default().push(s);
    }
    let rejected: HashSet<PathBuf> = by_file
        .iter()
        .filter(|(_, group)| group.len() > options.max_findings_per_file || has_shared_line(group))
        .map(|(path, _)| path.to_path_buf())
        .collect();

    let mut kept: Vec<DatasetSample> = samples.into_iter().filter(|s| !rejected.contains(&s.source_path)).collect();
    kept.sort_by(|a, b| {
        (&a.source_path, a.completion_point, a.sample_id).cmp(&(&b.source_path, b.completion_point, b.sample_id))
    });
    let mut seen = HashSet::new();
    kept.retain(|s| seen.insert(s.context.clone()));
    kept
}

fn has_shared_line(group: &[&DatasetSample]) -> bool {
    let mut spans: Vec<LineSpan> = group.iter().map(|s| s.defect.original_span).collect();
    spans.sort();
    spans.windows(2).any(|w| w[0].intersects(w[1]))
}

/// Largest-remainder apportionment of `n` seats over category counts.
/// Ties on the remainder go to the category listed first.
pub fn apportion(counts: &BTreeMap<DefectCategory, usize>, n: usize) -> BTreeMap<DefectCategory, usize> {
    let total: usize = counts.values().sum();
    let mut quotas: BTreeMap<DefectCategory, usize> = BTreeMap::new();
    if total == 0 {
        return quotas;
    }
    let mut remainders = Vec::new();
    for (&cat, &count) in counts {
        let exact = count as u128 * n as u128;
        quotas.insert(cat, (exact / total as u128) as usize);
        remainders.push((exact % total as u128, cat));
    }
    let assigned: usize = quotas.values().sum();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, cat) in remainders.into_iter().take(n - assigned) {
        *quotas.get_mut(&cat).expect("category present") += 1;
    }
    quotas
}

/// Picks `n` samples with per-category quotas proportional to the pool,
/// drawing uniformly within each category. Output keeps pool order.
pub fn proportional_sample(samples: &[DatasetSample], n: usize, seed: u64) -> Result<Vec<DatasetSample>, DatasetError> {
    if n > samples.len() {
        return Err(DatasetError::NotEnoughSamples {
            requested: n,
            available: samples.len(),
        });
    }
    let mut pools: BTreeMap<DefectCategory, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        pools.entry(s.defect.category).or_default().push(i);
    }
    let counts = pools.iter().map(|(c, p)| (*c, p.len())).collect();
    let quotas = apportion(&counts, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = BTreeSet::new();
    for (cat, pool) in &pools {
        let quota = quotas[cat];
        for pick in index::sample(&mut rng, pool.len(), quota) {
            chosen.insert(pool[pick]);
        }
    }
    Ok(chosen.into_iter().map(|i| samples[i].clone()).collect())
}

/// Lowercased rule id with `/` replaced by `-`.
pub fn rule_slug(rule_id: &str) -> String {
    rule_id.to_lowercase().replace('/', "-")
}

/// The sample facts carried in a context file name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleMetadata {
    pub sample_id: SampleId,
    pub category: DefectCategory,
    pub rule_slug: String,
    pub completion_line: usize,
}

pub fn encode_filename(meta: &SampleMetadata) -> String {
    format!(
        "{}__{}__{}__L{}.py",
        meta.sample_id, meta.category, meta.rule_slug, meta.completion_line
    )
}

pub fn decode_filename(name: &str) -> Result<SampleMetadata, DatasetError> {
    let bad = || DatasetError::BadFilename(name.to_owned());
    let stem = name.strip_suffix(".py").ok_or_else(bad)?;
    let mut head = stem.splitn(3, "__");
    let (Some(id), Some(category), Some(rest)) = (head.next(), head.next(), head.next()) else {
        return Err(bad());
    };
    let sample_id = id.parse().map_err(|_| bad())?;
    let category = category.parse().map_err(|_| bad())?;
    let cut = rest.rfind("__L").ok_or_else(bad)?;
    let (rule_slug, line) = (&rest[..cut], &rest[cut + 3..]);
    if line.is_empty() || !line.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let completion_line = line.parse().map_err(|_| bad())?;
    if rule_slug.is_empty() || rule_slug.contains('/') {
        return Err(bad());
    }
    let rule_slug = rule_slug.to_owned();
    Ok(SampleMetadata {
        sample_id,
        category,
        rule_slug,
        completion_line,
    })
}

/// Dataset-level settings recorded on the first manifest line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format_version: u32,
    pub seed: u64,
    pub max_findings_per_file: usize,
    pub sample_size: usize,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    manifest_header: ManifestHeader,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleLine {
    sample_id: SampleId,
    source_path: PathBuf,
    context_file: String,
    co_block_file: String,
    completion_point: usize,
    defect: DefectInfo,
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Writes `manifest.jsonl`, `contexts/`, and `coblocks/` under `dir`.
pub fn write_manifest(samples: &[DatasetSample], dir: &Path, header: &ManifestHeader) -> Result<(), DatasetError> {
    let contexts = dir.join("contexts");
    let coblocks = dir.join("coblocks");
    for d in [&contexts, &coblocks] {
        fs::create_dir_all(d).map_err(io_err(d))?;
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    let file = fs::File::create(&manifest_path).map_err(io_err(&manifest_path))?;
    let mut out = BufWriter::new(file);
    write_json_line(
        &mut out,
        &manifest_path,
        &HeaderLine {
            manifest_header: header.clone(),
        },
    )?;
    for s in samples {
        let context_file = format!("contexts/{}", encode_filename(&s.metadata()));
        let co_block_file = format!("coblocks/{}.txt", s.sample_id);
        let ctx_path = dir.join(&context_file);
        fs::write(&ctx_path, &s.context).map_err(io_err(&ctx_path))?;
        let co_path = dir.join(&co_block_file);
        fs::write(&co_path, &s.co_block).map_err(io_err(&co_path))?;
        let entry = SampleLine {
            sample_id: s.sample_id,
            source_path: s.source_path.clone(),
            context_file,
            co_block_file,
            completion_point: s.completion_point,
            defect: s.defect.clone(),
        };
        write_json_line(&mut out, &manifest_path, &entry)?;
    }
    out.flush().map_err(io_err(&manifest_path))
}

pub(crate) fn write_json_line<W: Write, T: Serialize>(out: &mut W, path: &Path, value: &T) -> Result<(), DatasetError> {
    let line = serde_json::to_string(value).expect("manifest types serialize");
    out.write_all(line.as_bytes())
        .and_then(|_| out.write_all(b"\n"))
        .map_err(io_err(path))
}

/// Loads a dataset written by [`write_manifest`].
pub fn read_manifest(dir: &Path) -> Result<(Option<ManifestHeader>, Vec<DatasetSample>), DatasetError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let file = fs::File::open(&manifest_path).map_err(io_err(&manifest_path))?;
    let mut header = None;
    let mut samples = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&manifest_path))?;
        if line.trim().is_empty() {
            continue;
        }
        if idx == 0 {
            if let Ok(h) = serde_json::from_str::<HeaderLine>(&line) {
                header = Some(h.manifest_header);
                continue;
            }
        }
        let entry: SampleLine = serde_json::from_str(&line).map_err(|e| DatasetError::ManifestSyntax {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        let read = |rel: &str| {
            fs::read_to_string(dir.join(rel)).map_err(|e| DatasetError::Manifest {
                sample_id: entry.sample_id.to_string(),
                reason: format!("cannot read {rel}: {e}"),
            })
        };
        samples.push(DatasetSample {
            context: read(&entry.context_file)?,
            co_block: read(&entry.co_block_file)?,
            sample_id: entry.sample_id,
            source_path: entry.source_path,
            completion_point: entry.completion_point,
            defect: entry.defect,
        });
    }
    Ok((header, samples))
}

/// Excises every finding of every file, numbering samples in file order.
/// Findings whose span does not fit their file are returned as errors
/// alongside the samples.
pub fn excise_all(files: &[SourceFile], findings: &[DefectFinding]) -> (Vec<DatasetSample>, Vec<DatasetError>) {
    let by_path: HashMap<&Path, &SourceFile> = files.iter().map(|f| (f.path.as_path(), f)).collect();
    let mut ordered: Vec<&DefectFinding> = findings.iter().filter(|f| by_path.contains_key(f.file.as_path())).collect();
    ordered.sort_by(|a, b| (&a.file, a.span, &a.rule_id).cmp(&(&b.file, b.span, &b.rule_id)));
    let mut samples = Vec::new();
    let mut errors = Vec::new();
    for finding in ordered {
        let id = SampleId(samples.len() as u32);
        match excise(by_path[finding.file.as_path()], finding, id) {
            Ok(s) => samples.push(s),
            Err(e) => errors.push(e),
        }
    }
    (samples, errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn finding(path: &str, start: usize, end: usize, category: DefectCategory) -> DefectFinding {
        DefectFinding {
            rule_id: "py/weak-crypto".into(),
            category,
            cwe: None,
            file: path.into(),
            span: LineSpan::new(start, end).unwrap(),
            message: String::new(),
        }
    }

    fn twenty_lines() -> SourceFile {
        let text: String = (1..=20).map(|i| format!("    line_{i} = {i}\n")).collect();
        SourceFile::new("a.py", text)
    }

    #[test]
    fn excise_span_12_to_15() {
        let s = excise(&twenty_lines(), &finding("a.py", 12, 15, DefectCategory::Vulnerability), SampleId(0)).unwrap();
        assert_eq!(crate::text::line_count(&s.context), 16);
        assert_eq!(s.completion_point, 12);
        assert_eq!(s.co_lines().len(), 4);
        assert!(s.co_lines().iter().all(|l| l.trim_start().starts_with("# ")));
        assert_eq!(s.co_lines()[0], "    # line_12 = 12");
        assert_eq!(restore(&s), twenty_lines().text);
    }

    #[test]
    fn excise_first_line() {
        let s = excise(&twenty_lines(), &finding("a.py", 1, 1, DefectCategory::Defect), SampleId(3)).unwrap();
        assert_eq!(s.completion_point, 1);
    }

    #[test]
    fn excise_out_of_range() {
        let err = excise(&twenty_lines(), &finding("a.py", 19, 21, DefectCategory::Defect), SampleId(0));
        assert!(matches!(err, Err(DatasetError::SpanOutOfRange { .. })));
        let one = SourceFile::new("b.py", "x = 1\n");
        assert!(matches!(
            excise(&one, &finding("b.py", 1, 1, DefectCategory::Defect), SampleId(0)),
            Err(DatasetError::NoContext { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn excise_restore_round_trip(
            lines in proptest::collection::vec("[ ]{0,4}[a-z#= ]{0,8}", 2..30),
            trailing in any::<bool>(),
            a in 0usize..100, b in 0usize..100,
        ) {
            let mut text = lines.join("\n");
            if trailing { text.push('\n'); }
            let file = SourceFile::new("p.py", text.clone());
            let n = file.line_count();
            let start = a % n + 1;
            let end = (start + b % 4).min(n);
            prop_assume!(end - start + 1 < n);
            let s = excise(&file, &finding("p.py", start, end, DefectCategory::Defect), SampleId(1)).unwrap();
            prop_assert_eq!(restore(&s), text);
        }
    }

    fn sample(path: &str, span: (usize, usize), context: &str, cat: DefectCategory, id: u32) -> DatasetSample {
        DatasetSample {
            sample_id: SampleId(id),
            source_path: path.into(),
            context: context.into(),
            co_block: "# x".into(),
            completion_point: span.0,
            defect: DefectInfo {
                rule_id: "py/x".into(),
                category: cat,
                cwe: None,
                original_span: LineSpan::new(span.0, span.1).unwrap(),
            },
        }
    }

    #[test]
    fn clean_drops_same_line_findings() {
        let samples = vec![
            sample("a.py", (3, 3), "c1", DefectCategory::Defect, 0),
            sample("a.py", (3, 4), "c2", DefectCategory::Defect, 1),
            sample("b.py", (1, 1), "c3", DefectCategory::Defect, 2),
        ];
        let kept = clean(samples, CleanOptions::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].source_path, PathBuf::from("b.py"));
    }

    #[test]
    fn clean_dedupes_identical_contexts() {
        let samples = vec![
            sample("vendor/z.py", (2, 2), "same", DefectCategory::Defect, 0),
            sample("vendor/a.py", (2, 2), "same", DefectCategory::Defect, 1),
        ];
        let kept = clean(samples, CleanOptions::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].source_path, PathBuf::from("vendor/a.py"));
    }

    #[test]
    fn clean_drops_excessive_files() {
        let samples: Vec<_> = (0..11)
            .map(|i| sample("big.py", (i * 2 + 1, i * 2 + 1), &format!("ctx{i}"), DefectCategory::Defect, i as u32))
            .collect();
        assert!(clean(samples.clone(), CleanOptions { max_findings_per_file: 10 }).is_empty());
        assert_eq!(clean(samples, CleanOptions { max_findings_per_file: 11 }).len(), 11);
    }

    #[test]
    fn clean_is_idempotent() {
        let samples = vec![
            sample("a.py", (1, 1), "x", DefectCategory::Defect, 0),
            sample("b.py", (1, 1), "x", DefectCategory::Defect, 1),
            sample("b.py", (5, 5), "y", DefectCategory::Defect, 2),
            sample("c.py", (2, 3), "z", DefectCategory::Defect, 3),
            sample("c.py", (3, 3), "w", DefectCategory::Defect, 4),
        ];
        let once = clean(samples, CleanOptions::default());
        assert_eq!(clean(once.clone(), CleanOptions::default()), once);
    }

    #[test]
    fn apportion_thousand_over_six_categories() {
        use DefectCategory::*;
        let counts: BTreeMap<_, _> =
            [(Vulnerability, 2070), (Reliability, 480), (Defect, 3760), (Maintainability, 3400), (Correctness, 90), (Modularity, 200)]
                .into_iter()
                .collect();
        let q = apportion(&counts, 1000);
        assert_eq!(q[&Vulnerability], 207);
        assert_eq!(q[&Reliability], 48);
        assert_eq!(q[&Defect], 376);
        assert_eq!(q[&Maintainability], 340);
        assert_eq!(q[&Correctness], 9);
        assert_eq!(q[&Modularity], 20);
        assert_eq!(q.values().sum::<usize>(), 1000);
    }

    #[test]
    fn apportion_three_to_one() {
        use DefectCategory::*;
        let counts: BTreeMap<_, _> = [(Vulnerability, 30), (Defect, 10)].into_iter().collect();
        let q = apportion(&counts, 8);
        assert_eq!((q[&Vulnerability], q[&Defect]), (6, 2));
    }

    proptest! {
        #[test]
        fn quotas_sum_and_fit(counts in proptest::collection::vec(0usize..50, 6), frac in 0.0f64..=1.0) {
            let map: BTreeMap<_, _> = DefectCategory::ALL.into_iter().zip(counts.iter().copied()).collect();
            let total: usize = counts.iter().sum();
            let n = (total as f64 * frac) as usize;
            let q = apportion(&map, n);
            if total > 0 {
                prop_assert_eq!(q.values().sum::<usize>(), n);
                for (c, k) in &q { prop_assert!(*k <= map[c]); }
            }
        }
    }

    #[test]
    fn proportional_sample_single_category_and_errors() {
        let pool: Vec<_> = (0..9).map(|i| sample("a.py", (i + 1, i + 1), "c", DefectCategory::Reliability, i as u32)).collect();
        let picked = proportional_sample(&pool, 5, DEFAULT_SEED).unwrap();
        assert_eq!(picked.len(), 5);
        assert_eq!(proportional_sample(&pool, 5, DEFAULT_SEED).unwrap(), picked);
        assert!(matches!(proportional_sample(&pool, 10, 1), Err(DatasetError::NotEnoughSamples { .. })));
    }

    #[test]
    fn filename_codec() {
        let meta = SampleMetadata {
            sample_id: SampleId(42),
            category: DefectCategory::Vulnerability,
            rule_slug: rule_slug("py/weak-crypto"),
            completion_line: 12,
        };
        let name = encode_filename(&meta);
        assert_eq!(name, "000042__vulnerability__py-weak-crypto__L12.py");
        assert_eq!(decode_filename(&name).unwrap(), meta);
        assert!(decode_filename("x.py").is_err());
        assert!(decode_filename("000001__nope__r__L3.py").is_err());
        assert!(decode_filename("000001__defect__r__L.py").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn filename_round_trip(id in 0u32..2_000_000, cat in 0usize..6, slug in "[a-z0-9][a-z0-9_.-]{0,20}", line in 1usize..100_000) {
            let meta = SampleMetadata { sample_id: SampleId(id), category: DefectCategory::ALL[cat], rule_slug: slug, completion_line: line };
            prop_assert_eq!(decode_filename(&encode_filename(&meta)).unwrap(), meta);
        }
    }
}
