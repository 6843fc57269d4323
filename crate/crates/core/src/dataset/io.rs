//! JSONL readers and writers for examples, retrieval results and triplets.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use super::types::{AnnotatedTriplet, CompressionLabel, QaExample, RetrievalSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleFormat {
    #[default]
    Qa,
    /// Every record must carry a `history` array (possibly empty).
    Conversational,
}

/// Iterate non-blank lines of a JSONL file as `(line_number, object)`.
fn read_objects(path: &Path) -> Result<Vec<(usize, Map<String, Value>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|source| Error::Json {
            line: line_no,
            source,
        })?;
        match value {
            Value::Object(map) => out.push((line_no, map)),
            _ => {
                return Err(Error::InvalidRecord {
                    line: line_no,
                    what: "expected a JSON object".into(),
                })
            }
        }
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(&record).map_err(|source| Error::Json { line: 0, source })?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn required<'a>(map: &'a Map<String, Value>, field: &'static str, line: usize) -> Result<&'a Value> {
    map.get(field).ok_or(Error::MissingField { line, field })
}

fn required_str(map: &Map<String, Value>, field: &'static str, line: usize) -> Result<String> {
    required(map, field, line)?
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| Error::InvalidRecord {
            line,
            what: format!("field `{field}` must be a string"),
        })
}

fn parse_history(value: &Value, line: usize) -> Result<Vec<(String, String)>> {
    let bad = || Error::InvalidRecord {
        line,
        what: "history must be a list of [role, text] pairs".into(),
    };
    value
        .as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|turn| match turn.as_array().map(Vec::as_slice) {
            Some([Value::String(role), Value::String(text)]) => Ok((role.clone(), text.clone())),
            _ => Err(bad()),
        })
        .collect()
}

fn parse_example(map: &Map<String, Value>, line: usize, format: ExampleFormat) -> Result<QaExample> {
    let id = required_str(map, "id", line)?;
    let query = required_str(map, "query", line)?;
    if query.trim().is_empty() {
        return Err(Error::InvalidRecord {
            line,
            what: "query empty".into(),
        });
    }
    let answers = required(map, "answers", line)?
        .as_array()
        .ok_or_else(|| Error::InvalidRecord {
            line,
            what: "field `answers` must be a list of strings".into(),
        })?
        .iter()
        .map(|a| {
            a.as_str().map(str::to_owned).ok_or_else(|| Error::InvalidRecord {
                line,
                what: "field `answers` must be a list of strings".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if answers.is_empty() {
        return Err(Error::InvalidRecord {
            line,
            what: "gold_answers empty".into(),
        });
    }
    let history = match (map.get("history"), format) {
        (Some(Value::Null) | None, ExampleFormat::Conversational) => {
            return Err(Error::MissingField {
                line,
                field: "history",
            })
        }
        (Some(Value::Null) | None, ExampleFormat::Qa) => None,
        (Some(v), _) => Some(parse_history(v, line)?),
    };
    Ok(QaExample {
        id,
        query,
        gold_answers: answers,
        history,
    })
}

/// Load and validate examples in file order.
pub fn load_examples(path: &Path, format: ExampleFormat) -> Result<Vec<QaExample>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, map) in read_objects(path)? {
        let example = parse_example(&map, line, format)?;
        if !seen.insert(example.id.clone()) {
            return Err(Error::DuplicateId {
                id: example.id,
                line,
            });
        }
        out.push(example);
    }
    Ok(out)
}

pub fn save_examples(path: &Path, examples: &[QaExample]) -> Result<()> {
    write_jsonl(path, examples)
}

/// A non-fatal observation made while loading a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadWarning {
    pub line: usize,
    pub message: String,
}

/// Retrieval sets keyed by query id, plus load-time warnings.
#[derive(Debug, Clone, Default)]
pub struct Retrievals {
    pub sets: BTreeMap<String, RetrievalSet>,
    pub warnings: Vec<LoadWarning>,
}

impl Retrievals {
    pub fn get(&self, query_id: &str) -> Option<&RetrievalSet> {
        self.sets.get(query_id)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Largest N across all sets.
    pub fn max_n(&self) -> usize {
        self.sets.values().map(RetrievalSet::len).max().unwrap_or(0)
    }
}

impl FromIterator<RetrievalSet> for Retrievals {
    fn from_iter<T: IntoIterator<Item = RetrievalSet>>(iter: T) -> Self {
        Retrievals {
            sets: iter
                .into_iter()
                .map(|r| (r.query_id().to_owned(), r))
                .collect(),
            warnings: Vec::new(),
        }
    }
}

fn parse_retrieval(map: &Map<String, Value>, line: usize) -> Result<RetrievalSet> {
    let query_id = required_str(map, "query_id", line)?;
    let docs = required(map, "docs", line)?
        .as_array()
        .ok_or_else(|| Error::InvalidRecord {
            line,
            what: "field `docs` must be a list".into(),
        })?;
    let mut parsed = Vec::with_capacity(docs.len());
    for doc in docs {
        let doc = doc.as_object().ok_or_else(|| Error::InvalidRecord {
            line,
            what: "each doc must be an object".into(),
        })?;
        let doc_id = required_str(doc, "doc_id", line)?;
        let text = required_str(doc, "text", line)?;
        if text.is_empty() {
            return Err(Error::InvalidRecord {
                line,
                what: format!("doc {doc_id} has empty text"),
            });
        }
        let score = required(doc, "score", line)?
            .as_f64()
            .filter(|s| s.is_finite())
            .ok_or_else(|| Error::InvalidRecord {
                line,
                what: format!("doc {doc_id} score must be a finite number"),
            })?;
        parsed.push((doc_id, text, score));
    }
    RetrievalSet::from_ordered(query_id, parsed).ok_or(Error::EmptyRetrieval { line })
}

/// Load retrieval results. Documents are trusted to be listed best-first;
/// ranks follow list position and score inversions only produce warnings.
pub fn load_retrievals(path: &Path) -> Result<Retrievals> {
    let mut out = Retrievals::default();
    for (line, map) in read_objects(path)? {
        let set = parse_retrieval(&map, line)?;
        if set.has_increasing_scores() {
            let message = format!(
                "scores increase with rank for query {}; keeping listed order",
                set.query_id()
            );
            log::warn!("{}:{line}: {message}", path.display());
            out.warnings.push(LoadWarning { line, message });
        }
        if out.sets.contains_key(set.query_id()) {
            return Err(Error::DuplicateId {
                id: set.query_id().to_owned(),
                line,
            });
        }
        out.sets.insert(set.query_id().to_owned(), set);
    }
    Ok(out)
}

#[derive(Serialize)]
struct DocRecord<'a> {
    doc_id: &'a str,
    text: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct RetrievalRecord<'a> {
    query_id: &'a str,
    docs: Vec<DocRecord<'a>>,
}

pub fn save_retrievals<'a>(
    path: &Path,
    sets: impl IntoIterator<Item = &'a RetrievalSet>,
) -> Result<()> {
    write_jsonl(
        path,
        sets.into_iter().map(|s| RetrievalRecord {
            query_id: s.query_id(),
            docs: s
                .docs()
                .iter()
                .map(|d| DocRecord {
                    doc_id: &d.doc_id,
                    text: &d.text,
                    score: d.score,
                })
                .collect(),
        }),
    )
}

pub fn save_triplets(path: &Path, triplets: &[AnnotatedTriplet]) -> Result<()> {
    write_jsonl(path, triplets)
}

/// Load triplets. When `max_n` is given, labels above it are rejected.
pub fn load_triplets(path: &Path, max_n: Option<usize>) -> Result<Vec<AnnotatedTriplet>> {
    let mut out = Vec::new();
    for (line, map) in read_objects(path)? {
        let example_id = required_str(&map, "example_id", line)?;
        let retrieval_ref = required_str(&map, "query_id", line)?;
        let generator = required_str(&map, "generator", line)?;
        let raw_label = required(&map, "label", line)?;
        let label: CompressionLabel =
            serde_json::from_value(raw_label.clone()).map_err(|_| Error::UnknownLabel {
                line,
                token: raw_label.to_string(),
            })?;
        if let (CompressionLabel::K(k), Some(n)) = (label, max_n) {
            if k > n {
                return Err(Error::LabelExceedsN {
                    line,
                    label: k,
                    max_n: n,
                });
            }
        }
        out.push(AnnotatedTriplet {
            example_id,
            retrieval_ref,
            label,
            generator_fingerprint: generator,
        });
    }
    Ok(out)
}
