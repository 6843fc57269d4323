use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl RougeScore {
    fn from_counts(hits: usize, pred_total: usize, ref_total: usize) -> Self {
        if hits == 0 || pred_total == 0 || ref_total == 0 {
            return RougeScore::default();
        }
        let precision = hits as f64 / pred_total as f64;
        let recall = hits as f64 / ref_total as f64;
        RougeScore {
            precision,
            recall,
            f: 2.0 * precision * recall / (precision + recall),
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// ROUGE-N over clipped n-gram multiset overlap.
pub fn rouge_n(pred: &str, reference: &str, n: usize) -> RougeScore {
    let p = tokenize(pred);
    let r = tokenize(reference);
    let pc = ngram_counts(&p, n);
    let rc = ngram_counts(&r, n);
    let hits = pc
        .iter()
        .map(|(g, c)| (*c).min(rc.get(g).copied().unwrap_or(0)))
        .sum();
    RougeScore::from_counts(hits, pc.values().sum(), rc.values().sum())
}

/// Length of the longest common subsequence, two-row DP.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(pred: &str, reference: &str) -> RougeScore {
    let p = tokenize(pred);
    let r = tokenize(reference);
    RougeScore::from_counts(lcs_len(&p, &r), p.len(), r.len())
}
