use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::decimal::Decimal2;
use crate::detector::{normalize_indent, uncomment};
use crate::source::{extract_comment_blocks, CommentBlock, SourceFile};
use crate::text::{is_blank, Lines};

pub const DEFAULT_SIMILARITY: f64 = 0.8;

/// A file and the comment blocks in it judged to be commented-out code.
#[derive(Clone, Debug)]
pub struct PositionInput {
    pub file: SourceFile,
    pub co_blocks: Vec<CommentBlock>,
}

/// Where commented-out code sits relative to its closest active twin.
/// Offsets are signed line distances: `-1` means the block ends on the
/// line right above the twin, `+1` that it starts right below it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionDistribution {
    pub counts: BTreeMap<i64, usize>,
    pub matched: usize,
    pub unmatched: usize,
    /// Share of matched blocks with offset in `-8..=-1`.
    pub above_band_pct: Option<Decimal2>,
    /// Share of matched blocks with offset in `1..=3`.
    pub below_band_pct: Option<Decimal2>,
    pub covered_pct: Option<Decimal2>,
}

impl PositionDistribution {
    fn from_offsets(offsets: &[i64], unmatched: usize) -> Self {
        let mut counts = BTreeMap::new();
        for &d in offsets {
            *counts.entry(d).or_insert(0) += 1;
        }
        let matched = offsets.len();
        let band = |lo: i64, hi: i64| offsets.iter().filter(|d| (lo..=hi).contains(*d)).count();
        let (above, below) = (band(-8, -1), band(1, 3));
        let pct = |n: usize| Decimal2::percent(n as i128, matched as i128);
        PositionDistribution {
            counts,
            matched,
            unmatched,
            above_band_pct: pct(above),
            below_band_pct: pct(below),
            covered_pct: pct(above + below),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("offset,count\n");
        for (d, n) in &self.counts {
            out.push_str(&format!("{d},{n}\n"));
        }
        out
    }
}

struct Candidate {
    similarity: f64,
    distance: i64,
    start: usize,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        if self.similarity != other.similarity {
            return self.similarity > other.similarity;
        }
        if self.distance.abs() != other.distance.abs() {
            return self.distance.abs() < other.distance.abs();
        }
        self.start < other.start
    }
}

fn signed_distance(block_start: usize, block_end: usize, twin_start: usize, twin_end: usize) -> i64 {
    if block_end < twin_start {
        -((twin_start - block_end) as i64)
    } else {
        (block_start - twin_end) as i64
    }
}

fn best_twin(lines: &Lines, active: &[bool], block: &CommentBlock, threshold: f64) -> Option<i64> {
    let len = block.line_count();
    let target = normalize_indent(&uncomment(block));
    let target_chars = target.chars().count();
    let mut best: Option<Candidate> = None;
    for start in 1..=lines.len().saturating_sub(len) + 1 {
        let end = start + len - 1;
        if end > lines.len() || !active[start - 1..end].iter().all(|a| *a) {
            continue;
        }
        let window = normalize_indent(&lines.as_slice()[start - 1..end].join("\n"));
        if is_blank(&window) {
            continue;
        }
        let window_chars = window.chars().count();
        let (lo, hi) = (target_chars.min(window_chars), target_chars.max(window_chars));
        if hi == 0 || (lo as f64) < threshold * hi as f64 {
            continue;
        }
        let similarity = strsim::normalized_levenshtein(&target, &window);
        if similarity < threshold {
            continue;
        }
        let cand = Candidate {
            similarity,
            distance: signed_distance(block.span.start_line(), block.span.end_line(), start, end),
            start,
        };
        if best.as_ref().is_none_or(|b| cand.beats(b)) {
            best = Some(cand);
        }
    }
    best.map(|b| b.distance)
}

/// Pairs each commented-out block with the most similar window of active
/// code of equal line count in the same file.
pub fn co_position_stats(inputs: &[PositionInput], threshold: f64) -> PositionDistribution {
    let mut offsets = Vec::new();
    let mut unmatched = 0;
    for input in inputs {
        let lines = Lines::parse(&input.file.text);
        let mut active = vec![true; lines.len()];
        for block in extract_comment_blocks(&input.file) {
            for line in block.span.start_line()..=block.span.end_line() {
                active[line - 1] = false;
            }
        }
        for block in &input.co_blocks {
            match best_twin(&lines, &active, block, threshold) {
                Some(d) => offsets.push(d),
                None => unmatched += 1,
            }
        }
    }
    PositionDistribution::from_offsets(&offsets, unmatched)
}
