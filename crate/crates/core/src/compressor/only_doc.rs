//! ONLY_DOC baseline: keep the single document holding the sentence with the
//! highest lexical overlap with the query.

use std::collections::HashSet;

use super::{assemble_prompt, count_tokens, TemplateRegistry};
use crate::dataset::{QaExample, RankedDocument, RetrievalSet};
use crate::error::Result;
use crate::generator::Prompt;
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq)]
pub struct OnlyDocContext {
    pub query_id: String,
    pub doc: RankedDocument,
    pub best_sentence: String,
    /// Fraction of distinct query tokens found in `best_sentence`.
    pub overlap: f64,
    pub prompt: Prompt,
    pub token_count: usize,
}

/// Split after `.`, `!` or `?` when followed by whitespace.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            if let Some(&(_, next)) = chars.peek() {
                if next.is_whitespace() {
                    let end = i + c.len_utf8();
                    let s = text[start..end].trim();
                    if !s.is_empty() {
                        out.push(s);
                    }
                    start = end;
                }
            }
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

fn overlap(query: &HashSet<String>, sentence: &str) -> f64 {
    if query.is_empty() {
        return 0.0;
    }
    let tokens: HashSet<String> = tokenize(sentence).into_iter().collect();
    query.intersection(&tokens).count() as f64 / query.len() as f64
}

pub fn only_doc_select(
    registry: &TemplateRegistry,
    example: &QaExample,
    retrieval: &RetrievalSet,
    template_id: &str,
) -> Result<OnlyDocContext> {
    let query: HashSet<String> = tokenize(&example.query).into_iter().collect();
    let mut best: Option<(f64, &RankedDocument, &str)> = None;
    for doc in retrieval.docs() {
        for sentence in split_sentences(&doc.text) {
            let score = overlap(&query, sentence);
            // strict comparison keeps the lower rank on ties
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, doc, sentence));
            }
        }
    }
    let (score, doc, sentence) =
        best.unwrap_or_else(|| (0.0, &retrieval.docs()[0], retrieval.docs()[0].text.as_str()));
    let prompt = assemble_prompt(registry, example, std::slice::from_ref(doc), template_id)?;
    Ok(OnlyDocContext {
        query_id: retrieval.query_id().to_owned(),
        doc: doc.clone(),
        best_sentence: sentence.to_owned(),
        overlap: score,
        token_count: count_tokens(&prompt.text),
        prompt,
    })
}
