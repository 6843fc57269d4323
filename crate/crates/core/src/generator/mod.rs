//! The RAG system under test: something that turns a prompt into an answer,
//! plus the judge deciding whether that answer is correct.

mod http;
mod memo;
mod mock;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use http::{ApiStyle, HttpGenerator, HttpGeneratorConfig};
pub use memo::{MemoGenerator, MemoStats};
pub use mock::{mock_generate, MockOracle, MockOracleConfig, UNKNOWN_ANSWER, WRONG_ANSWER};

use crate::error::{Error, Result};
use crate::metrics::{exact_match, token_f1};

/// A rendered generation prompt together with the pieces it was built from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Prompt {
    pub template_id: String,
    pub query: String,
    pub context_docs: Vec<String>,
    /// The exact text sent to the model.
    pub text: String,
}

/// Everything a generator may look at for one call. `golds` is only
/// consulted by oracle implementations; remote models see `prompt.text`.
#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub example_id: &'a str,
    pub prompt: &'a Prompt,
    pub golds: &'a [String],
}

pub trait Generator: Send + Sync {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String>;

    /// Stable identity of the system, recorded next to every label it produces.
    fn fingerprint(&self) -> String;
}

impl<G: Generator + ?Sized> Generator for &G {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String> {
        (**self).generate(request)
    }
    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String> {
        (**self).generate(request)
    }
    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}

impl<G: Generator + ?Sized> Generator for Arc<G> {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String> {
        (**self).generate(request)
    }
    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}

/// How generated text is compared with the gold answers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum JudgeMode {
    #[default]
    ExactMatch,
    /// Correct when the best token F1 against any gold reaches the threshold.
    F1Threshold(f64),
}

pub const DEFAULT_F1_THRESHOLD: f64 = 0.6;

impl fmt::Display for JudgeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JudgeMode::ExactMatch => f.write_str("em"),
            JudgeMode::F1Threshold(t) => write!(f, "f1:{t}"),
        }
    }
}

impl FromStr for JudgeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "em" => Ok(JudgeMode::ExactMatch),
            "f1" => Ok(JudgeMode::F1Threshold(DEFAULT_F1_THRESHOLD)),
            _ => {
                let t = s
                    .strip_prefix("f1:")
                    .and_then(|t| t.parse::<f64>().ok())
                    .filter(|t| (0.0..=1.0).contains(t))
                    .ok_or_else(|| Error::Config(format!("unknown judge mode {s:?}")))?;
                Ok(JudgeMode::F1Threshold(t))
            }
        }
    }
}

impl Serialize for JudgeMode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for JudgeMode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Decide whether `output` answers correctly given the gold aliases.
pub fn judge_correct(output: &str, golds: &[String], mode: JudgeMode) -> bool {
    match mode {
        JudgeMode::ExactMatch => exact_match(output, golds) == 1.0,
        JudgeMode::F1Threshold(t) => token_f1(output, golds) >= t,
    }
}
