//! End-to-end runs: synthetic corpora, method comparisons, document-count
//! sweeps and confusion reports.

mod config;
mod confusion;
mod corpus;
mod pipeline;
mod sweep;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use config::{DatasetConfig, GeneratorConfig, MethodSpec, PipelineConfig, PredictorSpec};
pub use confusion::{render_confusion_csv, render_confusion_text, report_confusion, REFERENCE_LINE};
pub use corpus::{make_synthetic_corpus, CorpusPlan, CorpusSpec, PlanEntry, Split, SyntheticCorpus};
pub use pipeline::{
    evaluate_pipeline, generate_and_score, run_pipeline, score_output, select_contexts, Manifest, MethodBudget,
    PipelineOutput, RunData, Selected, Selector,
};
pub use sweep::{interior_peak, sweep_csv, sweep_document_count, sweep_over, SweepPoint};

use crate::error::{Error, Result};

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json { line: 0, source })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        line: source.line(),
        source,
    })
}
