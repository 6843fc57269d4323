//! Adaptive context compression for retrieval-augmented generation.
//!
//! Annotate each query with the smallest top-k prefix that lets a generator
//! answer, learn to predict that k, then truncate retrieved context to it.

pub mod annotator;
pub mod compressor;
pub mod dataset;
pub mod error;
pub mod generator;
pub mod harness;
pub mod metrics;
pub mod predictor;
pub mod text;
pub mod transport;

pub use annotator::{annotate_dataset, find_optimal_k, select_top_k, AnnotateOptions, Annotation, AnnotationStats};
pub use compressor::{compress, CompressedContext, TemplateRegistry, UnanswerableFallback};
pub use dataset::{
    join_dataset, AnnotatedTriplet, CompressionLabel, JoinedDataset, QaExample, RankedDocument, RetrievalSet,
};
pub use error::{Error, Result};
pub use generator::{Generator, JudgeMode, MockOracle, MockOracleConfig};
pub use predictor::{CompressionRatePredictor, FeatureSpec, PredictorModel, TrainConfig};
