//! Apply a compression rate: keep the top-k prefix of the ranked list and
//! build the generation prompt from it.

mod only_doc;
mod template;

pub use only_doc::{only_doc_select, split_sentences, OnlyDocContext};
pub use template::{
    assemble_prompt, PromptTemplate, TemplateRegistry, CONVERSATIONAL_TEMPLATE, DEFAULT_TEMPLATE,
};

use serde::{Deserialize, Serialize};

use crate::dataset::{CompressionLabel, QaExample, RankedDocument, RetrievalSet};
use crate::error::Result;
use crate::generator::Prompt;

/// What to keep when the label says no prefix suffices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnanswerableFallback {
    #[default]
    ToN,
    ToZero,
}

/// The rank-prefix `D_pred` and the prompt assembled from it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedContext {
    pub query_id: String,
    /// Exactly ranks `1..=k` of the source retrieval set.
    pub kept_docs: Vec<RankedDocument>,
    pub k: usize,
    pub prompt: Prompt,
    pub token_count: usize,
}

/// JSONL export row for a compressed context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressedRecord {
    pub query_id: String,
    pub k: usize,
    pub doc_ids: Vec<String>,
    pub token_count: usize,
}

impl CompressedContext {
    pub fn record(&self) -> CompressedRecord {
        CompressedRecord {
            query_id: self.query_id.clone(),
            k: self.k,
            doc_ids: self.kept_docs.iter().map(|d| d.doc_id.clone()).collect(),
            token_count: self.token_count,
        }
    }
}

/// Number of maximal non-whitespace runs.
pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Resolve a label to a prefix length for a set of `n` documents. Labels
/// larger than `n` keep everything.
pub fn resolve_k(label: CompressionLabel, n: usize, fallback: UnanswerableFallback) -> usize {
    match (label, fallback) {
        (CompressionLabel::K(k), _) => k.min(n),
        (CompressionLabel::Unanswerable, UnanswerableFallback::ToN) => n,
        (CompressionLabel::Unanswerable, UnanswerableFallback::ToZero) => 0,
    }
}

pub fn compress(
    registry: &TemplateRegistry,
    example: &QaExample,
    retrieval: &RetrievalSet,
    label: CompressionLabel,
    fallback: UnanswerableFallback,
    template_id: &str,
) -> Result<CompressedContext> {
    let k = resolve_k(label, retrieval.len(), fallback);
    let kept_docs = retrieval.docs()[..k].to_vec();
    let prompt = assemble_prompt(registry, example, &kept_docs, template_id)?;
    Ok(CompressedContext {
        query_id: retrieval.query_id().to_owned(),
        token_count: count_tokens(&prompt.text),
        kept_docs,
        k,
        prompt,
    })
}
