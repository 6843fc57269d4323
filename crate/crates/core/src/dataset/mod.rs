//! Domain types and dataset persistence.

mod io;
mod types;

pub use io::{
    load_examples, load_retrievals, load_triplets, save_examples, save_retrievals, save_triplets,
    ExampleFormat, LoadWarning, Retrievals,
};
pub use types::{AnnotatedTriplet, CompressionLabel, QaExample, RankedDocument, RetrievalSet};

use crate::error::{Error, Result};

/// An example paired with its retrieval results.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinedExample {
    pub example: QaExample,
    pub retrieval: RetrievalSet,
}

#[derive(Debug, Clone, Default)]
pub struct JoinedDataset {
    pub pairs: Vec<JoinedExample>,
    /// Ids of examples that had no retrieval set.
    pub dropped: Vec<String>,
}

impl JoinedDataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, example_id: &str) -> Option<&JoinedExample> {
        self.pairs.iter().find(|p| p.example.id == example_id)
    }

    pub fn max_n(&self) -> usize {
        self.pairs.iter().map(|p| p.retrieval.len()).max().unwrap_or(0)
    }

    /// Index pairs by example id.
    pub fn index(&self) -> std::collections::HashMap<&str, &JoinedExample> {
        self.pairs.iter().map(|p| (p.example.id.as_str(), p)).collect()
    }
}

/// Pair every example with the retrieval set sharing its id, in example
/// order. Examples without retrievals are reported in `dropped`.
pub fn join_dataset(examples: &[QaExample], retrievals: &Retrievals) -> Result<JoinedDataset> {
    let mut joined = JoinedDataset::default();
    for example in examples {
        match retrievals.get(&example.id) {
            Some(retrieval) => joined.pairs.push(JoinedExample {
                example: example.clone(),
                retrieval: retrieval.clone(),
            }),
            None => joined.dropped.push(example.id.clone()),
        }
    }
    if joined.pairs.is_empty() {
        return Err(Error::NoJoinableExamples);
    }
    if !joined.dropped.is_empty() {
        log::warn!(
            "{} examples have no retrieval results: {}",
            joined.dropped.len(),
            joined.dropped.join(", ")
        );
    }
    Ok(joined)
}
