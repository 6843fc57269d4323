//! Answer-quality metrics: exact match, token F1, ROUGE-1/2/L, the
//! specific/open-ended query split, and per-method aggregation.

mod report;
mod rouge;

pub use report::{aggregate, reports_to_csv, EvalReport, ExampleResult, MetricSummary};
pub use rouge::{lcs_len, rouge_l, rouge_n, RougeScore};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use crate::text::normalize_answer;
use crate::dataset::RetrievalSet;
use crate::error::{Error, Result};
use crate::text::tokenize;

/// 1.0 when the normalized prediction equals any normalized gold alias.
pub fn exact_match(pred: &str, golds: &[String]) -> f64 {
    let pred = normalize_answer(pred);
    if golds.iter().any(|g| normalize_answer(g) == pred) {
        1.0
    } else {
        0.0
    }
}

fn bag(tokens: &[String]) -> HashMap<&str, usize> {
    let mut counts = HashMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    counts
}

fn f1_single(pred: &str, gold: &str) -> f64 {
    if normalize_answer(pred) == normalize_answer(gold) {
        return 1.0;
    }
    let p = tokenize(pred);
    let g = tokenize(gold);
    match (p.is_empty(), g.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let gold_bag = bag(&g);
    let overlap: usize = bag(&p)
        .iter()
        .map(|(t, c)| (*c).min(gold_bag.get(t).copied().unwrap_or(0)))
        .sum();
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / p.len() as f64;
    let recall = overlap as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Max over gold aliases of bag-of-token F1. A prediction that matches an
/// alias under answer normalization scores 1.
pub fn token_f1(pred: &str, golds: &[String]) -> f64 {
    golds
        .iter()
        .map(|g| f1_single(pred, g))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuerySpecificity {
    Specific,
    OpenEnded,
}

impl QuerySpecificity {
    pub fn as_str(self) -> &'static str {
        match self {
            QuerySpecificity::Specific => "specific",
            QuerySpecificity::OpenEnded => "open_ended",
        }
    }
}

/// Spread above which a query counts as specific.
pub const SPECIFICITY_SPREAD: f64 = 0.3;
const SPREAD_EPS: f64 = 1e-9;

/// Classify a query from the relevance scores of its top documents against
/// the answer: specific iff `max - min` strictly exceeds 0.3.
pub fn specificity_split(scores: &[f64]) -> Result<QuerySpecificity> {
    if scores.is_empty() {
        return Err(Error::Config("specificity split needs at least one score".into()));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    // tolerance keeps decimal inputs such as 0.5 - 0.2 on the open-ended side
    if max - min > SPECIFICITY_SPREAD + SPREAD_EPS {
        Ok(QuerySpecificity::Specific)
    } else {
        Ok(QuerySpecificity::OpenEnded)
    }
}

/// Token-F1 relevance of each of the top `limit` documents against the gold
/// answers.
pub fn answer_relevance(retrieval: &RetrievalSet, golds: &[String], limit: usize) -> Vec<f64> {
    retrieval
        .docs()
        .iter()
        .take(limit)
        .map(|d| token_f1(&d.text, golds))
        .collect()
}
