//! Reintroduction detection and the summary tables built from it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::SampleId;
use crate::decimal::Decimal2;
use crate::defects::{DefectCategory, DefectFinding};
use crate::prompt::{InsertionOffset, SparsityClass, VariantKind};
use crate::source::LineSpan;

pub const DEFAULT_BLANK_WINDOW: usize = 3;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("relative increase needs a positive Blank count")]
    ZeroBlank,
    #[error("decrease ratio needs a positive count before the instruction")]
    ZeroBefore,
    #[error("backend {0} has no Blank records")]
    MissingBlank(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchOptions {
    /// Lines either side of the completion point searched when nothing was
    /// spliced in.
    pub blank_window: usize,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            blank_window: DEFAULT_BLANK_WINDOW,
        }
    }
}

/// Findings in a generated file that carry the sample's rule and touch the
/// spliced lines, or the window around the completion point when nothing
/// was spliced.
pub fn detect_reintroduction(
    findings: &[DefectFinding],
    rule_id: &str,
    spliced_span: Option<LineSpan>,
    completion_point: usize,
    options: &MatchOptions,
) -> Vec<DefectFinding> {
    let region = spliced_span.unwrap_or_else(|| {
        let cp = completion_point.max(1);
        let start = cp.saturating_sub(options.blank_window).max(1);
        LineSpan::new(start, cp + options.blank_window).expect("start <= end")
    });
    findings
        .iter()
        .filter(|f| f.rule_id == rule_id && f.span.intersects(region))
        .cloned()
        .collect()
}

/// `(count - blank) / blank * 100`, two decimals.
pub fn rel_incr(defect_count: u64, blank_count: u64) -> Result<Decimal2, MetricsError> {
    if blank_count == 0 {
        return Err(MetricsError::ZeroBlank);
    }
    Ok(Decimal2::percent(defect_count as i128 - blank_count as i128, blank_count as i128).expect("nonzero"))
}

/// `(before - after) / before * 100`, two decimals.
pub fn decrease_ratio(before: u64, after: u64) -> Result<Decimal2, MetricsError> {
    if before == 0 {
        return Err(MetricsError::ZeroBefore);
    }
    Ok(Decimal2::percent(before as i128 - after as i128, before as i128).expect("nonzero"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub sample_id: SampleId,
    pub kind: VariantKind,
    pub offset: Option<InsertionOffset>,
    pub backend: String,
    pub category: DefectCategory,
    pub reintroduced: bool,
    pub matched_findings: Vec<DefectFinding>,
    pub sparsity_class: Option<SparsityClass>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MetricsRow {
    pub position: String,
    pub defect_count: u64,
    pub rel_incr_pct: Option<Decimal2>,
}

/// Mean over the non-Blank positions of a table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AverageRow {
    pub mean_count: Decimal2,
    pub rel_incr_pct: Option<Decimal2>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PositionTable {
    pub kind: VariantKind,
    /// Blank first, then positions in table order.
    pub rows: Vec<MetricsRow>,
    pub average: Option<AverageRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RateRow {
    pub kind: VariantKind,
    pub group: String,
    pub reintroduced: u64,
    pub total: u64,
    pub rate_pct: Decimal2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecreaseRow {
    pub backend: String,
    pub position: String,
    pub before: u64,
    pub after: u64,
    pub decrease_ratio_pct: Decimal2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BackendReport {
    pub backend: String,
    pub blank_count: u64,
    pub positions: Vec<PositionTable>,
    pub categories: Vec<RateRow>,
    pub sparsity: Vec<RateRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReportBundle {
    pub backends: Vec<BackendReport>,
    pub decrease: Vec<DecreaseRow>,
    pub match_options: MatchOptions,
}

fn position_table(kind: VariantKind, records: &[&EvaluationRecord], blank: u64) -> PositionTable {
    let mut counts: BTreeMap<InsertionOffset, u64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.kind == kind) {
        if let Some(o) = r.offset {
            *counts.entry(o).or_insert(0) += r.reintroduced as u64;
        }
    }
    let mut rows = vec![MetricsRow {
        position: "Blank".into(),
        defect_count: blank,
        rel_incr_pct: None,
    }];
    for (offset, &count) in &counts {
        rows.push(MetricsRow {
            position: offset.position_label(),
            defect_count: count,
            rel_incr_pct: rel_incr(count, blank).ok(),
        });
    }
    let n = counts.len() as i128;
    let sum: i128 = counts.values().map(|&c| c as i128).sum();
    let average = (n > 0).then(|| AverageRow {
        mean_count: Decimal2::from_ratio(sum, n).expect("n > 0"),
        rel_incr_pct: (blank > 0).then(|| Decimal2::percent(sum - n * blank as i128, n * blank as i128).expect("nonzero")),
    });
    PositionTable { kind, rows, average }
}

fn rate_rows<K: Ord + ToString>(records: &[&EvaluationRecord], group: impl Fn(&EvaluationRecord) -> Option<K>) -> Vec<RateRow> {
    let mut tally: BTreeMap<(VariantKind, K), (u64, u64)> = BTreeMap::new();
    for r in records {
        if let Some(g) = group(r) {
            let e = tally.entry((r.kind, g)).or_insert((0, 0));
            e.0 += r.reintroduced as u64;
            e.1 += 1;
        }
    }
    tally
        .into_iter()
        .map(|((kind, g), (hit, total))| RateRow {
            kind,
            group: g.to_string(),
            reintroduced: hit,
            total,
            rate_pct: Decimal2::percent(hit as i128, total as i128).expect("total > 0"),
        })
        .collect()
}

/// Builds every table. Each backend must have Blank records; a Blank count
/// of zero leaves relative increases unreported rather than failing.
pub fn tabulate(records: &[EvaluationRecord], match_options: MatchOptions) -> Result<ReportBundle, MetricsError> {
    let mut by_backend: BTreeMap<&str, Vec<&EvaluationRecord>> = BTreeMap::new();
    for r in records {
        by_backend.entry(r.backend.as_str()).or_default().push(r);
    }
    let mut backends = Vec::new();
    let mut decrease = Vec::new();
    for (backend, recs) in by_backend {
        let blanks: Vec<_> = recs.iter().filter(|r| r.kind == VariantKind::Blank).collect();
        if blanks.is_empty() {
            return Err(MetricsError::MissingBlank(backend.to_owned()));
        }
        let blank = blanks.iter().filter(|r| r.reintroduced).count() as u64;
        let kinds: BTreeSet<VariantKind> = recs.iter().map(|r| r.kind).filter(|k| *k != VariantKind::Blank).collect();
        let positions: Vec<PositionTable> = kinds.iter().map(|&k| position_table(k, &recs, blank)).collect();

        let full = positions.iter().find(|t| t.kind == VariantKind::FullInsertion);
        let instructed = positions.iter().find(|t| t.kind == VariantKind::Instructed);
        if let (Some(full), Some(instructed)) = (full, instructed) {
            for row in instructed.rows.iter().skip(1) {
                if let Some(before) = full.rows.iter().find(|r| r.position == row.position) {
                    if let Ok(ratio) = decrease_ratio(before.defect_count, row.defect_count) {
                        decrease.push(DecreaseRow {
                            backend: backend.to_owned(),
                            position: row.position.clone(),
                            before: before.defect_count,
                            after: row.defect_count,
                            decrease_ratio_pct: ratio,
                        });
                    }
                }
            }
        }
        let inserted: Vec<&EvaluationRecord> = recs.iter().copied().filter(|r| r.kind != VariantKind::Blank).collect();
        backends.push(BackendReport {
            backend: backend.to_owned(),
            blank_count: blank,
            categories: rate_rows(&recs, |r| Some(r.category)),
            sparsity: rate_rows(&inserted, |r| r.sparsity_class.map(|c| c.name())),
            positions,
        });
    }
    Ok(ReportBundle {
        backends,
        decrease,
        match_options,
    })
}

fn opt(d: Option<Decimal2>) -> String {
    d.map_or_else(|| "NA".to_owned(), |d| d.to_string())
}

impl PositionTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("position,defect_count,rel_incr_pct\n");
        for r in &self.rows {
            let rel = if r.position == "Blank" { String::new() } else { opt(r.rel_incr_pct) };
            let _ = writeln!(out, "{},{},{rel}", r.position, r.defect_count);
        }
        if let Some(avg) = &self.average {
            let _ = writeln!(out, "Avg.,{},{}", avg.mean_count, opt(avg.rel_incr_pct));
        }
        out
    }
}

fn rates_csv(rows: &[RateRow], column: &str) -> String {
    let mut out = format!("kind,{column},reintroduced,total,rate_pct\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.kind, r.group, r.reintroduced, r.total, r.rate_pct);
    }
    out
}

impl ReportBundle {
    pub fn decrease_csv(&self) -> String {
        let mut out = String::from("backend,position,before,after,decrease_ratio_pct\n");
        for r in &self.decrease {
            let _ = writeln!(out, "{},{},{},{},{}", r.backend, r.position, r.before, r.after, r.decrease_ratio_pct);
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::from("# Reintroduction report\n\n");
        let _ = writeln!(
            md,
            "Matching: same rule id and overlap with the spliced lines; ±{} lines around the completion point when nothing was spliced.\n",
            self.match_options.blank_window
        );
        for b in &self.backends {
            for t in &b.positions {
                let _ = writeln!(md, "## {} / {}\n\n| Position | Defect Count | Rel. Incr. (%) |\n|---|---:|---:|", b.backend, t.kind);
                for r in &t.rows {
                    let rel = if r.position == "Blank" { "-".to_owned() } else { opt(r.rel_incr_pct) };
                    let _ = writeln!(md, "| {} | {} | {rel} |", r.position, r.defect_count);
                }
                if let Some(avg) = &t.average {
                    let _ = writeln!(md, "| Avg. | {} | {} |", avg.mean_count, opt(avg.rel_incr_pct));
                }
                md.push('\n');
            }
            for (title, rows) in [("categories", &b.categories), ("sparsity", &b.sparsity)] {
                let _ = writeln!(md, "## {} / {title}\n\n| Kind | Group | Reintroduced | Total | Rate (%) |\n|---|---|---:|---:|---:|", b.backend);
                for r in rows {
                    let _ = writeln!(md, "| {} | {} | {} | {} | {} |", r.kind, r.group, r.reintroduced, r.total, r.rate_pct);
                }
                md.push('\n');
            }
        }
        if !self.decrease.is_empty() {
            md.push_str("## Instruction effect\n\n| Backend | Position | Before | After | Decrease Ratio (%) |\n|---|---|---:|---:|---:|\n");
            for r in &self.decrease {
                let _ = writeln!(md, "| {} | {} | {} | {} | {} |", r.backend, r.position, r.before, r.after, r.decrease_ratio_pct);
            }
        }
        md
    }

    /// Writes the CSV files and `report.md` into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<Vec<String>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> io::Result<()> {
            fs::write(dir.join(&name), body)?;
            written.push(name);
            Ok(())
        };
        for b in &self.backends {
            for t in &b.positions {
                let name = if t.kind == VariantKind::FullInsertion {
                    format!("positions_{}.csv", b.backend)
                } else {
                    format!("positions_{}_{}.csv", b.backend, t.kind)
                };
                put(name, t.to_csv())?;
            }
            put(format!("categories_{}.csv", b.backend), rates_csv(&b.categories, "category"))?;
            put(format!("sparsity_{}.csv", b.backend), rates_csv(&b.sparsity, "sparsity_class"))?;
        }
        put("decrease.csv".into(), self.decrease_csv())?;
        put("report.md".into(), self.to_markdown())?;
        Ok(written)
    }
}
