use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{categorize, cwe_from_tags, DefectFinding};
use crate::source::LineSpan;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("malformed SARIF at {path}: {reason}")]
pub struct SarifError {
    pub path: String,
    pub reason: String,
}

fn malformed(path: impl Into<String>, reason: impl Into<String>) -> SarifError {
    SarifError {
        path: path.into(),
        reason: reason.into(),
    }
}

/// A SARIF result that could not become a finding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSkip {
    pub run: usize,
    pub result: usize,
    pub rule_id: Option<String>,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ingestion {
    pub findings: Vec<DefectFinding>,
    pub skips: Vec<IngestSkip>,
}

impl Ingestion {
    pub fn total_results(&self) -> usize {
        self.findings.len() + self.skips.len()
    }
}

/// Corpus-relative path for an artifact URI.
pub fn normalize_uri(uri: &str, root: Option<&Path>) -> PathBuf {
    let stripped = uri.strip_prefix("file://").unwrap_or(uri);
    let path = Path::new(stripped);
    let path = match root {
        Some(root) => path.strip_prefix(root).unwrap_or(path),
        None => path,
    };
    let path = path.strip_prefix("./").unwrap_or(path);
    path.to_owned()
}

pub fn ingest_sarif_str(document: &str, root: Option<&Path>) -> Result<Ingestion, SarifError> {
    let value: Value = serde_json::from_str(document).map_err(|e| malformed("$", e.to_string()))?;
    ingest_sarif(&value, root)
}

/// One finding per `runs[].results[]` entry that has a physical location;
/// the rest are recorded as skips.
pub fn ingest_sarif(document: &Value, root: Option<&Path>) -> Result<Ingestion, SarifError> {
    let runs = document
        .as_object()
        .ok_or_else(|| malformed("$", "expected an object"))?
        .get("runs")
        .ok_or_else(|| malformed("$.runs", "missing"))?
        .as_array()
        .ok_or_else(|| malformed("$.runs", "expected an array"))?;

    let mut out = Ingestion::default();
    for (run_idx, run) in runs.iter().enumerate() {
        let run_path = format!("$.runs[{run_idx}]");
        let run = run.as_object().ok_or_else(|| malformed(&run_path, "expected an object"))?;
        let rule_tags = collect_rule_tags(run.get("tool"));
        let results = match run.get("results") {
            None | Some(Value::Null) => continue,
            Some(Value::Array(results)) => results,
            Some(_) => return Err(malformed(format!("{run_path}.results"), "expected an array")),
        };
        for (res_idx, result) in results.iter().enumerate() {
            let res_path = format!("{run_path}.results[{res_idx}]");
            let result = result.as_object().ok_or_else(|| malformed(&res_path, "expected an object"))?;
            let rule_id = result
                .get("ruleId")
                .and_then(Value::as_str)
                .or_else(|| result.get("rule").and_then(|r| r.get("id")).and_then(Value::as_str))
                .map(str::to_owned);
            let skip = |reason: &str| IngestSkip {
                run: run_idx,
                result: res_idx,
                rule_id: rule_id.clone(),
                reason: reason.to_owned(),
            };
            let Some(rule) = rule_id.clone() else {
                out.skips.push(skip("missing ruleId"));
                continue;
            };
            let Some(physical) = result
                .get("locations")
                .and_then(Value::as_array)
                .and_then(|l| l.first())
                .and_then(|l| l.get("physicalLocation"))
            else {
                out.skips.push(skip("no physical location"));
                continue;
            };
            let Some(uri) = physical.pointer("/artifactLocation/uri").and_then(Value::as_str) else {
                out.skips.push(skip("no artifact uri"));
                continue;
            };
            let region = physical.get("region");
            let start = region.and_then(|r| r.get("startLine")).and_then(Value::as_u64);
            let Some(start) = start else {
                out.skips.push(skip("no region start line"));
                continue;
            };
            let end = region.and_then(|r| r.get("endLine")).and_then(Value::as_u64).unwrap_or(start);
            let Some(span) = LineSpan::new(start as usize, end as usize) else {
                out.skips.push(skip("invalid region"));
                continue;
            };

            let mut tags: Vec<String> = rule_tags.get(rule.as_str()).cloned().unwrap_or_default();
            tags.extend(string_array(result.get("properties").and_then(|p| p.get("tags"))));
            out.findings.push(DefectFinding {
                category: categorize(&tags),
                cwe: cwe_from_tags(&tags),
                rule_id: rule,
                file: normalize_uri(uri, root),
                span,
                message: result
                    .get("message")
                    .and_then(|m| m.get("text"))
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_owned(),
            });
        }
    }
    Ok(out)
}

fn string_array(value: Option<&Value>) -> Vec<String> {
    value
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_str).map(str::to_owned).collect())
        .unwrap_or_default()
}

/// Rule id → tags, from the driver and from tool extensions (query packs).
fn collect_rule_tags(tool: Option<&Value>) -> HashMap<String, Vec<String>> {
    let mut map = HashMap::new();
    let Some(tool) = tool else { return map };
    let components = std::iter::once(tool.get("driver"))
        .chain(tool.get("extensions").and_then(Value::as_array).into_iter().flatten().map(Some));
    for component in components.flatten() {
        for rule in component.get("rules").and_then(Value::as_array).into_iter().flatten() {
            if let Some(id) = rule.get("id").and_then(Value::as_str) {
                let tags = string_array(rule.get("properties").and_then(|p| p.get("tags")));
                map.entry(id.to_owned()).or_insert(tags);
            }
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defects::DefectCategory;
    use serde_json::json;

    #[test]
    fn empty_results() {
        let doc = json!({"version": "2.1.0", "runs": [{"results": []}]});
        assert_eq!(ingest_sarif(&doc, None).unwrap(), Ingestion::default());
    }

    fn weak_crypto_result(with_location: bool) -> Value {
        let mut result = json!({
            "ruleId": "py/weak-crypto",
            "message": {"text": "weak hash"},
        });
        if with_location {
            result["locations"] = json!([{
                "physicalLocation": {
                    "artifactLocation": {"uri": "src/app.py"},
                    "region": {"startLine": 12, "endLine": 15}
                }
            }]);
        }
        result
    }

    #[test]
    fn one_result_with_rule_metadata() {
        let doc = json!({
            "runs": [{
                "tool": {"driver": {"name": "x", "rules": [
                    {"id": "py/weak-crypto", "properties": {"tags": ["security", "external/cwe/cwe-327"]}}
                ]}},
                "results": [weak_crypto_result(true)]
            }]
        });
        let ing = ingest_sarif(&doc, None).unwrap();
        assert_eq!(ing.findings.len(), 1);
        let f = &ing.findings[0];
        assert_eq!(f.rule_id, "py/weak-crypto");
        assert_eq!(f.span, LineSpan::new(12, 15).unwrap());
        assert_eq!(f.category, DefectCategory::Vulnerability);
        assert_eq!(f.cwe.as_deref(), Some("CWE-327"));
        assert_eq!(f.file, PathBuf::from("src/app.py"));
    }

    #[test]
    fn result_without_location_is_a_skip() {
        let doc = json!({"runs": [{"results": [weak_crypto_result(true), weak_crypto_result(false)]}]});
        let ing = ingest_sarif(&doc, None).unwrap();
        assert_eq!(ing.findings.len(), 1);
        assert_eq!(ing.skips.len(), 1);
        assert_eq!(ing.skips[0].result, 1);
        assert_eq!(ing.total_results(), 2);
        assert_eq!(ing.findings[0].category, DefectCategory::Defect);
    }

    #[test]
    fn extension_rules_are_consulted() {
        let doc = json!({"runs": [{
            "tool": {"driver": {"name": "CodeQL"}, "extensions": [{"name": "pack", "rules": [
                {"id": "py/weak-crypto", "properties": {"tags": ["maintainability"]}}
            ]}]},
            "results": [weak_crypto_result(true)]
        }]});
        let ing = ingest_sarif(&doc, None).unwrap();
        assert_eq!(ing.findings[0].category, DefectCategory::Maintainability);
    }

    #[test]
    fn malformed_documents_name_the_path() {
        assert_eq!(ingest_sarif(&json!([]), None).unwrap_err().path, "$");
        assert_eq!(ingest_sarif(&json!({"runs": 3}), None).unwrap_err().path, "$.runs");
        assert_eq!(
            ingest_sarif(&json!({"runs": [{"results": [1]}]}), None).unwrap_err().path,
            "$.runs[0].results[0]"
        );
        assert_eq!(ingest_sarif_str("{", None).unwrap_err().path, "$");
    }

    #[test]
    fn uris_are_made_relative() {
        assert_eq!(normalize_uri("file:///tmp/snap/a/b.py", Some(Path::new("/tmp/snap"))), PathBuf::from("a/b.py"));
        assert_eq!(normalize_uri("./a.py", None), PathBuf::from("a.py"));
    }
}
