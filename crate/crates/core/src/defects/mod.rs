//! Defect findings: external scanner invocation, SARIF ingestion, and
//! statistics on defective commented-out code.

mod sarif;
mod scanner;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decimal::Decimal2;
use crate::detector::{try_parse, uncomment_line, EmptyTotal, Granularity, PrevalenceRow};
use crate::source::{CommentBlock, LineSpan, SourceFile};
use crate::text::Lines;

pub use sarif::{ingest_sarif, ingest_sarif_str, normalize_uri, Ingestion, IngestSkip, SarifError};
pub use scanner::{
    run_external_scanner, run_scanners_bounded, ScanJob, ScannerConfig, ScannerError, Snapshot,
};

/// Closed set of defect categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefectCategory {
    Vulnerability,
    Reliability,
    Defect,
    Maintainability,
    Correctness,
    Modularity,
}

impl DefectCategory {
    pub const ALL: [DefectCategory; 6] = [
        DefectCategory::Vulnerability,
        DefectCategory::Reliability,
        DefectCategory::Defect,
        DefectCategory::Maintainability,
        DefectCategory::Correctness,
        DefectCategory::Modularity,
    ];

    /// Tag-matching priority, highest first. `Defect` is the fallback.
    const PRIORITY: [(DefectCategory, &'static str); 5] = [
        (DefectCategory::Vulnerability, "security"),
        (DefectCategory::Reliability, "reliability"),
        (DefectCategory::Correctness, "correctness"),
        (DefectCategory::Modularity, "modularity"),
        (DefectCategory::Maintainability, "maintainability"),
    ];

    pub fn name(self) -> &'static str {
        match self {
            DefectCategory::Vulnerability => "vulnerability",
            DefectCategory::Reliability => "reliability",
            DefectCategory::Defect => "defect",
            DefectCategory::Maintainability => "maintainability",
            DefectCategory::Correctness => "correctness",
            DefectCategory::Modularity => "modularity",
        }
    }
}

impl fmt::Display for DefectCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DefectCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DefectCategory::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown defect category {s:?}"))
    }
}

/// Category from scanner rule tags. `security` maps to vulnerability;
/// otherwise the first of reliability, correctness, modularity,
/// maintainability present wins; no match gives `defect`.
pub fn categorize<S: AsRef<str>>(tags: &[S]) -> DefectCategory {
    let lowered: Vec<String> = tags.iter().map(|t| t.as_ref().to_ascii_lowercase()).collect();
    DefectCategory::PRIORITY
        .iter()
        .find(|(_, tag)| lowered.iter().any(|t| t == tag))
        .map_or(DefectCategory::Defect, |(category, _)| *category)
}

/// CWE identifier from tags of the form `external/cwe/cwe-327`.
pub fn cwe_from_tags<S: AsRef<str>>(tags: &[S]) -> Option<String> {
    tags.iter().find_map(|t| {
        let t = t.as_ref().to_ascii_lowercase();
        let id = t.strip_prefix("external/cwe/cwe-")?;
        let digits = id.trim_start_matches('0');
        (!id.is_empty() && id.bytes().all(|b| b.is_ascii_digit()))
            .then(|| format!("CWE-{}", if digits.is_empty() { "0" } else { digits }))
    })
}

/// One scanner result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectFinding {
    pub rule_id: String,
    pub category: DefectCategory,
    pub cwe: Option<String>,
    pub file: PathBuf,
    pub span: LineSpan,
    pub message: String,
}

/// Result of uncommenting CO blocks inside their file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UncommentOutcome {
    /// The transformed file parses; `spans` are the uncommented regions.
    Transformed { text: String, spans: Vec<LineSpan> },
    Skipped { reason: String },
}

/// Replaces each block's lines with their uncommented forms. The whole file
/// must still parse afterwards, otherwise the file is skipped.
pub fn uncomment_in_place(file: &SourceFile, blocks: &[CommentBlock]) -> UncommentOutcome {
    if blocks.is_empty() {
        return UncommentOutcome::Transformed {
            text: file.text.clone(),
            spans: Vec::new(),
        };
    }
    let mut lines = Lines::parse(&file.text);
    for block in blocks {
        if block.span.end_line() > lines.len() {
            return UncommentOutcome::Skipped {
                reason: format!("block {} lies outside the file", block.span),
            };
        }
        let removed = lines.remove(block.span.start_line(), block.span.end_line());
        lines.insert(block.span.start_line(), removed.iter().map(|l| uncomment_line(l)));
    }
    let text = lines.render();
    if try_parse(&text).is_none() {
        return UncommentOutcome::Skipped {
            reason: "syntax error after uncommenting".to_owned(),
        };
    }
    UncommentOutcome::Transformed {
        text,
        spans: blocks.iter().map(|b| b.span).collect(),
    }
}

/// A file whose CO blocks were uncommented and scanned.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScannedFile {
    pub repository: String,
    pub file: PathBuf,
    /// Uncommented CO regions with their CO line counts.
    pub co_blocks: Vec<LineSpan>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectiveRow {
    pub granularity: Granularity,
    pub defective: u64,
    pub total: u64,
    pub ratio_pct: Decimal2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoDefectReport {
    pub rows: Vec<DefectiveRow>,
    /// Files excluded because uncommenting broke their syntax.
    pub skipped_files: usize,
}

impl CoDefectReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("granularity,defective,total,ratio_pct\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", row.granularity.name(), row.defective, row.total, row.ratio_pct));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Granularity | Defective | Total | Ratio(%) |\n|---|---|---|---|\n");
        for row in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {} |\n",
                row.granularity.table_label(),
                row.defective,
                row.total,
                row.ratio_pct
            ));
        }
        out.push_str(&format!("\nFiles skipped after uncommenting: {}\n", self.skipped_files));
        out
    }
}

fn row(granularity: Granularity, defective: u64, total: u64) -> Result<DefectiveRow, EmptyTotal> {
    let p = PrevalenceRow::new(granularity, defective, total)?;
    Ok(DefectiveRow {
        granularity,
        defective,
        total,
        ratio_pct: p.ratio_pct,
    })
}

/// Whether `finding` belongs to the uncommented region `span` of `file`.
pub fn attributes_to(finding: &DefectFinding, file: &Path, span: LineSpan) -> bool {
    finding.file == file && finding.span.intersects(span)
}

/// Defective-CO proportions at repository, file, and comment-line level.
///
/// `repository_total` is the number of repositories in the corpus; file and
/// comment-line totals count the scanned files and their CO lines.
pub fn co_defect_stats(
    repository_total: u64,
    scanned: &[ScannedFile],
    findings: &[DefectFinding],
    skipped_files: usize,
) -> Result<CoDefectReport, EmptyTotal> {
    let mut defective_repos = BTreeSet::new();
    let mut defective_files = 0u64;
    let mut defective_lines = 0u64;
    let mut total_lines = 0u64;
    for file in scanned {
        let mut file_defective = false;
        for span in &file.co_blocks {
            total_lines += span.len() as u64;
            if findings.iter().any(|f| attributes_to(f, &file.file, *span)) {
                defective_lines += span.len() as u64;
                file_defective = true;
            }
        }
        if file_defective {
            defective_files += 1;
            defective_repos.insert(file.repository.as_str());
        }
    }
    Ok(CoDefectReport {
        rows: vec![
            row(Granularity::Repository, defective_repos.len() as u64, repository_total)?,
            row(Granularity::File, defective_files, scanned.len() as u64)?,
            row(Granularity::CommentLine, defective_lines, total_lines)?,
        ],
        skipped_files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::extract_comment_blocks;

    #[test]
    fn categorize_examples() {
        assert_eq!(categorize(&["security", "external/cwe/cwe-327"]), DefectCategory::Vulnerability);
        assert_eq!(cwe_from_tags(&["security", "external/cwe/cwe-327"]).as_deref(), Some("CWE-327"));
        assert_eq!(categorize::<&str>(&[]), DefectCategory::Defect);
        assert_eq!(categorize(&["maintainability"]), DefectCategory::Maintainability);
        assert_eq!(categorize(&["maintainability", "reliability"]), DefectCategory::Reliability);
        assert_eq!(categorize(&["modularity", "correctness"]), DefectCategory::Correctness);
        assert_eq!(categorize(&["Security"]), DefectCategory::Vulnerability);
        assert_eq!(cwe_from_tags(&["external/cwe/cwe-079"]).as_deref(), Some("CWE-79"));
        assert_eq!(cwe_from_tags(&["external/cwe/cwe-x"]), None);
    }

    #[test]
    fn uncomment_valid_block() {
        let text = "def f(x):\n    y = x\n    # y = y * 2\n    return y\n";
        let file = SourceFile::new("a.py", text);
        let blocks = extract_comment_blocks(&file);
        match uncomment_in_place(&file, &blocks) {
            UncommentOutcome::Transformed { text, spans } => {
                assert_eq!(text, "def f(x):\n    y = x\n    y = y * 2\n    return y\n");
                assert_eq!(spans, vec![LineSpan::new(3, 3).unwrap()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uncomment_breaking_indentation_is_skipped() {
        let text = "def f(x):\n    y = x\n    #     y = y * 2\n    return y\n";
        let file = SourceFile::new("a.py", text);
        let blocks = extract_comment_blocks(&file);
        assert!(matches!(uncomment_in_place(&file, &blocks), UncommentOutcome::Skipped { .. }));
    }

    #[test]
    fn uncomment_without_blocks_is_identity() {
        let file = SourceFile::new("a.py", "x = 1\n# note\n");
        assert_eq!(
            uncomment_in_place(&file, &[]),
            UncommentOutcome::Transformed { text: file.text.clone(), spans: vec![] }
        );
    }

    #[test]
    fn only_block_lines_change() {
        let text = "a = 1\n# b = 2\nc = 3\n";
        let file = SourceFile::new("a.py", text);
        let blocks = extract_comment_blocks(&file);
        let UncommentOutcome::Transformed { text: out, .. } = uncomment_in_place(&file, &blocks) else {
            panic!()
        };
        let before: Vec<&str> = text.lines().collect();
        let after: Vec<&str> = out.lines().collect();
        assert_eq!(before[0], after[0]);
        assert_eq!(before[2], after[2]);
        assert_eq!(after[1], "b = 2");
    }

    fn finding(file: &str, start: usize, end: usize) -> DefectFinding {
        DefectFinding {
            rule_id: "py/x".into(),
            category: DefectCategory::Defect,
            cwe: None,
            file: file.into(),
            span: LineSpan::new(start, end).unwrap(),
            message: String::new(),
        }
    }

    #[test]
    fn defect_stats_ratios() {
        assert_eq!(row(Granularity::CommentLine, 10824, 51077).unwrap().ratio_pct.to_string(), "21.19");
        assert_eq!(row(Granularity::CommentLine, 0, 5).unwrap().ratio_pct.to_string(), "0.00");
        assert_eq!(row(Granularity::Repository, 3055, 6403).unwrap().ratio_pct.to_string(), "47.71");
    }

    #[test]
    fn defect_stats_attribution() {
        let scanned = vec![
            ScannedFile {
                repository: "r1".into(),
                file: "r1/a.py".into(),
                co_blocks: vec![LineSpan::new(3, 4).unwrap(), LineSpan::new(10, 12).unwrap()],
            },
            ScannedFile {
                repository: "r2".into(),
                file: "r2/b.py".into(),
                co_blocks: vec![LineSpan::new(1, 1).unwrap()],
            },
        ];
        let findings = vec![finding("r1/a.py", 4, 6), finding("r2/b.py", 5, 5)];
        let report = co_defect_stats(3, &scanned, &findings, 1).unwrap();
        let got: Vec<(u64, u64)> = report.rows.iter().map(|r| (r.defective, r.total)).collect();
        assert_eq!(got, vec![(1, 3), (1, 2), (2, 6)]);
        assert!(co_defect_stats(0, &scanned, &findings, 0).is_err());
    }
}
