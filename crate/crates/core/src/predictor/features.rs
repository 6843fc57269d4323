//! Fixed-layout feature vectors describing query complexity and retrieval
//! quality.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{QaExample, RetrievalSet};
use crate::text::tokenize;

const WH_WORDS: [&str; 6] = ["who", "what", "when", "where", "why", "how"];
const LENGTH_SCALE: f64 = 512.0;

/// Layout parameters. Two vectors are compatible iff their specs hash equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub max_n: usize,
}

impl FeatureSpec {
    pub fn new(max_n: usize) -> Self {
        FeatureSpec { max_n }
    }

    pub fn names(&self) -> Vec<String> {
        let n = self.max_n;
        let mut names = vec!["query_token_count".to_owned()];
        names.extend(WH_WORDS.iter().map(|w| format!("wh_{w}")));
        names.push("wh_other".into());
        names.push("num_docs".into());
        names.extend((1..=n).map(|i| format!("score_{i}")));
        names.extend((1..n).map(|i| format!("gap_{i}_{}", i + 1)));
        names.extend(["score_max", "score_min", "score_mean"].map(String::from));
        names.extend((1..=n).map(|i| format!("overlap_{i}")));
        names.extend((1..=n).map(|i| format!("length_{i}")));
        names.push("bias".into());
        names
    }

    pub fn dim(&self) -> usize {
        4 * self.max_n + 12
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(format!("features-v1:{}", self.names().join(",")).as_bytes());
        hex::encode(digest)[..16].to_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub spec: FeatureSpec,
    pub values: Vec<f64>,
}

fn wh_index(query: &str) -> usize {
    tokenize(query)
        .iter()
        .find_map(|t| WH_WORDS.iter().position(|w| w == t))
        .unwrap_or(WH_WORDS.len())
}

/// Build the feature vector. Documents beyond `spec.max_n` are ignored and
/// missing positions are zero.
pub fn extract_features(spec: FeatureSpec, example: &QaExample, retrieval: &RetrievalSet) -> FeatureVector {
    let n = spec.max_n;
    let full_query = example.full_query();
    let query_tokens = tokenize(&full_query);
    let query_set: HashSet<&str> = query_tokens.iter().map(String::as_str).collect();
    let docs = &retrieval.docs()[..retrieval.len().min(n)];
    let scores: Vec<f64> = docs.iter().map(|d| d.score).collect();

    let mut v = Vec::with_capacity(spec.dim());
    v.push(query_tokens.len() as f64);
    let mut wh = [0.0; 7];
    wh[wh_index(&example.query)] = 1.0;
    v.extend(wh);
    v.push(docs.len() as f64);
    v.extend((0..n).map(|i| scores.get(i).copied().unwrap_or(0.0)));
    v.extend((0..n.saturating_sub(1)).map(|i| match (scores.get(i), scores.get(i + 1)) {
        (Some(a), Some(b)) => a - b,
        _ => 0.0,
    }));
    if scores.is_empty() {
        v.extend([0.0; 3]);
    } else {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        v.extend([max, min, mean]);
    }
    v.extend((0..n).map(|i| {
        docs.get(i).map_or(0.0, |d| {
            if query_set.is_empty() {
                return 0.0;
            }
            let doc_tokens = tokenize(&d.text);
            let doc_set: HashSet<&str> = doc_tokens.iter().map(String::as_str).collect();
            query_set.intersection(&doc_set).count() as f64 / query_set.len() as f64
        })
    }));
    v.extend((0..n).map(|i| docs.get(i).map_or(0.0, |d| tokenize(&d.text).len() as f64 / LENGTH_SCALE)));
    v.push(1.0);
    debug_assert_eq!(v.len(), spec.dim());
    FeatureVector { spec, values: v }
}
