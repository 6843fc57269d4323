use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

/// A question with its gold answer aliases and, for conversational data,
/// the preceding turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaExample {
    pub id: String,
    pub query: String,
    #[serde(rename = "answers")]
    pub gold_answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<Vec<(String, String)>>,
}

impl QaExample {
    pub fn new(id: impl Into<String>, query: impl Into<String>, gold_answers: Vec<String>) -> Self {
        QaExample {
            id: id.into(),
            query: query.into(),
            gold_answers,
            history: None,
        }
    }

    pub fn with_history(mut self, history: Vec<(String, String)>) -> Self {
        self.history = Some(history);
        self
    }

    /// Query text with any dialogue history prepended, used wherever the
    /// predictor needs the full question context.
    pub fn full_query(&self) -> String {
        match &self.history {
            Some(turns) if !turns.is_empty() => {
                let mut parts: Vec<&str> = turns.iter().map(|(_, u)| u.as_str()).collect();
                parts.push(&self.query);
                parts.join(" ")
            }
            _ => self.query.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDocument {
    pub doc_id: String,
    pub text: String,
    pub score: f64,
    /// 1-based position in the retrieval list.
    pub rank: usize,
}

/// The ranked top-N documents retrieved for one query.
///
/// Ranks always form the contiguous sequence `1..=N` in list order.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalSet {
    query_id: String,
    docs: Vec<RankedDocument>,
}

impl RetrievalSet {
    /// Build a set from documents listed best-first. Ranks are assigned by
    /// position. Returns `None` when `docs` is empty.
    pub fn from_ordered<I>(query_id: impl Into<String>, docs: I) -> Option<Self>
    where
        I: IntoIterator<Item = (String, String, f64)>,
    {
        let docs: Vec<RankedDocument> = docs
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, text, score))| RankedDocument {
                doc_id,
                text,
                score,
                rank: i + 1,
            })
            .collect();
        if docs.is_empty() {
            return None;
        }
        Some(RetrievalSet {
            query_id: query_id.into(),
            docs,
        })
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn docs(&self) -> &[RankedDocument] {
        &self.docs
    }

    /// Number of retrieved documents, N.
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.docs.iter().map(|d| d.score)
    }

    /// True when some later document scores strictly higher than an earlier one.
    pub fn has_increasing_scores(&self) -> bool {
        self.docs.windows(2).any(|w| w[1].score > w[0].score)
    }
}

/// The minimal number of top-ranked documents needed, or `Unanswerable` when
/// no rank prefix yields a correct answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CompressionLabel {
    K(usize),
    Unanswerable,
}

impl CompressionLabel {
    pub fn k(self) -> Option<usize> {
        match self {
            CompressionLabel::K(k) => Some(k),
            CompressionLabel::Unanswerable => None,
        }
    }

    pub fn is_unanswerable(self) -> bool {
        matches!(self, CompressionLabel::Unanswerable)
    }
}

impl fmt::Display for CompressionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompressionLabel::K(k) => write!(f, "{k}"),
            CompressionLabel::Unanswerable => f.write_str("unanswerable"),
        }
    }
}

impl Serialize for CompressionLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            CompressionLabel::K(k) => serializer.serialize_u64(*k as u64),
            CompressionLabel::Unanswerable => serializer.serialize_str("unanswerable"),
        }
    }
}

impl<'de> Deserialize<'de> for CompressionLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct LabelVisitor;

        impl Visitor<'_> for LabelVisitor {
            type Value = CompressionLabel;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer or \"unanswerable\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(CompressionLabel::K(v as usize))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                usize::try_from(v)
                    .map(CompressionLabel::K)
                    .map_err(|_| E::custom(format!("negative label {v}")))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                if v == "unanswerable" {
                    Ok(CompressionLabel::Unanswerable)
                } else {
                    Err(E::custom(format!("unknown label token {v:?}")))
                }
            }
        }

        deserializer.deserialize_any(LabelVisitor)
    }
}

/// One predictor training row: which example, which retrieval set, and the
/// label produced by the RAG system identified by `generator`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedTriplet {
    pub example_id: String,
    #[serde(rename = "query_id")]
    pub retrieval_ref: String,
    pub label: CompressionLabel,
    #[serde(rename = "generator")]
    pub generator_fingerprint: String,
}
