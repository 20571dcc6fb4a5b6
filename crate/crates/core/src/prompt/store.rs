use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{classify_sparsity, ForgeError, InsertionOffset, PromptVariant, SparsityClass, VariantKind};
use crate::dataset::SampleId;
use crate::source::LineSpan;

pub const INDEX_FILE: &str = "index.jsonl";

/// One line of `prompts/index.jsonl`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantIndexEntry {
    pub sample_id: SampleId,
    pub kind: VariantKind,
    pub offset: String,
    pub inserted_span: Option<LineSpan>,
    pub completion_point_in_prompt: usize,
    pub sparsity_class: Option<SparsityClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction_line: Option<usize>,
}

impl VariantIndexEntry {
    pub fn of(variant: &PromptVariant) -> Self {
        VariantIndexEntry {
            sample_id: variant.sample_id,
            kind: variant.kind,
            offset: variant.offset_label(),
            inserted_span: variant.inserted_span,
            completion_point_in_prompt: variant.completion_point_in_prompt,
            sparsity_class: classify_sparsity(variant).ok(),
            instruction_line: variant.instruction_line,
        }
    }

    pub fn offset(&self) -> Result<Option<InsertionOffset>, ForgeError> {
        if self.offset == "blank" {
            Ok(None)
        } else {
            self.offset.parse().map(Some)
        }
    }

    fn relative_path(&self) -> String {
        format!("{}/{}__{}.py", self.sample_id, self.kind, self.offset)
    }
}

fn store_err(path: &Path, e: impl std::fmt::Display) -> ForgeError {
    ForgeError::Store(format!("{}: {e}", path.display()))
}

/// Writes each variant to `<dir>/<sample_id>/<kind>__<offset>.py` and the
/// index to `<dir>/index.jsonl`.
pub fn write_variants(dir: &Path, variants: &[PromptVariant]) -> Result<Vec<VariantIndexEntry>, ForgeError> {
    fs::create_dir_all(dir).map_err(|e| store_err(dir, e))?;
    let index_path = dir.join(INDEX_FILE);
    let mut index = BufWriter::new(fs::File::create(&index_path).map_err(|e| store_err(&index_path, e))?);
    let mut entries = Vec::with_capacity(variants.len());
    for v in variants {
        let entry = VariantIndexEntry::of(v);
        let path = dir.join(entry.relative_path());
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| store_err(parent, e))?;
        }
        fs::write(&path, &v.text).map_err(|e| store_err(&path, e))?;
        let line = serde_json::to_string(&entry).expect("index entries serialize");
        writeln!(index, "{line}").map_err(|e| store_err(&index_path, e))?;
        entries.push(entry);
    }
    index.flush().map_err(|e| store_err(&index_path, e))?;
    Ok(entries)
}

pub fn read_variants(dir: &Path) -> Result<Vec<PromptVariant>, ForgeError> {
    let index_path = dir.join(INDEX_FILE);
    let file = fs::File::open(&index_path).map_err(|e| store_err(&index_path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| store_err(&index_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: VariantIndexEntry =
            serde_json::from_str(&line).map_err(|e| store_err(&index_path, format!("line {}: {e}", n + 1)))?;
        let path = dir.join(entry.relative_path());
        let text = fs::read_to_string(&path).map_err(|e| store_err(&path, e))?;
        out.push(PromptVariant {
            sample_id: entry.sample_id,
            kind: entry.kind,
            offset: entry.offset()?,
            text,
            inserted_span: entry.inserted_span,
            completion_point_in_prompt: entry.completion_point_in_prompt,
            instruction_line: entry.instruction_line,
        });
    }
    Ok(out)
}
