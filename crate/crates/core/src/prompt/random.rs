use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ForgeError;
use crate::dataset::SampleId;
use crate::source::LineSpan;

/// A commented-out block whose uncommented form drew no scanner findings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolBlock {
    pub source: PathBuf,
    pub span: LineSpan,
    pub text: String,
}

impl PoolBlock {
    pub fn line_count(&self) -> usize {
        self.text.split('\n').count()
    }
}

/// Defect-free blocks indexed by line count.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RandomPool {
    by_len: BTreeMap<usize, Vec<PoolBlock>>,
}

impl RandomPool {
    pub fn new(blocks: impl IntoIterator<Item = PoolBlock>) -> Self {
        let mut by_len: BTreeMap<usize, Vec<PoolBlock>> = BTreeMap::new();
        for b in blocks {
            by_len.entry(b.line_count()).or_default().push(b);
        }
        for group in by_len.values_mut() {
            group.sort_by(|a, b| (&a.source, a.span).cmp(&(&b.source, b.span)));
            group.dedup_by(|a, b| a.text == b.text);
        }
        RandomPool { by_len }
    }

    pub fn len(&self) -> usize {
        self.by_len.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_len.is_empty()
    }

    pub fn max_line_count(&self) -> Option<usize> {
        self.by_len.keys().next_back().copied()
    }

    pub fn blocks(&self) -> impl Iterator<Item = &PoolBlock> {
        self.by_len.values().flatten()
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> io::Result<Self> {
        let mut blocks = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            blocks.push(serde_json::from_str(&line).map_err(io::Error::other)?);
        }
        Ok(RandomPool::new(blocks))
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for b in self.blocks() {
            serde_json::to_writer(&mut out, b).map_err(io::Error::other)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Uniform choice among pool blocks with `line_count` lines. Each sample
/// draws from its own ChaCha stream so selections do not depend on the
/// order samples are processed.
pub fn make_random_block(pool: &RandomPool, line_count: usize, seed: u64, sample: SampleId) -> Result<&str, ForgeError> {
    let group = pool.by_len.get(&line_count).ok_or(ForgeError::NoRandomBlock(line_count))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample.0 as u64);
    Ok(&group.choose(&mut rng).expect("groups are never empty").text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(i: usize, lines: usize) -> PoolBlock {
        PoolBlock {
            source: format!("f{i}.py").into(),
            span: LineSpan::with_len(1, lines).unwrap(),
            text: (0..lines).map(|l| format!("# v{i} = {l}")).collect::<Vec<_>>().join("\n"),
        }
    }

    #[test]
    fn seeded_selection_is_deterministic() {
        let pool = RandomPool::new((0..3).map(|i| block(i, 4)));
        let a = make_random_block(&pool, 4, 1903, SampleId(5)).unwrap();
        assert_eq!(make_random_block(&pool, 4, 1903, SampleId(5)).unwrap(), a);
        assert_eq!(a.split('\n').count(), 4);
        let picks: std::collections::HashSet<_> =
            (0..40).map(|s| make_random_block(&pool, 4, 1903, SampleId(s)).unwrap()).collect();
        assert!(picks.len() > 1);
    }

    #[test]
    fn missing_length_is_an_error() {
        let pool = RandomPool::new((0..3).map(|i| block(i, 4)));
        assert_eq!(make_random_block(&pool, 7, 1, SampleId(0)), Err(ForgeError::NoRandomBlock(7)));
        assert_eq!(pool.max_line_count(), Some(4));
    }

    #[test]
    fn jsonl_round_trip() {
        let pool = RandomPool::new([block(0, 1), block(1, 2), block(2, 2)]);
        let mut buf = Vec::new();
        pool.write_jsonl(&mut buf).unwrap();
        assert_eq!(RandomPool::read_jsonl(buf.as_slice()).unwrap(), pool);
    }
}
