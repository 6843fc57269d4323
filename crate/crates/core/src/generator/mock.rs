//! Deterministic stand-in for an LLM: it answers when the context contains
//! the gold answer, and can be configured to get confused by noisy context.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{GenerationRequest, Generator, Prompt};
use crate::error::Result;
use crate::text::contains_normalized;

pub const UNKNOWN_ANSWER: &str = "UNKNOWN";
pub const WRONG_ANSWER: &str = "WRONG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    #[default]
    NormalizedSubstring,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MockOracleConfig {
    pub match_mode: MatchMode,
    /// Fail whenever at least this many context documents lack every gold alias.
    pub confusion_threshold: Option<usize>,
    /// Probability in `[0, 1)` of replacing a correct answer with a wrong one.
    pub noise_rate: f64,
    pub seed: u64,
    /// Examples the model answers correctly with no context at all.
    pub closed_book_known: BTreeSet<String>,
}

impl MockOracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(crate::Error::Config(format!(
                "noise_rate must be in [0, 1), got {}",
                self.noise_rate
            )));
        }
        Ok(())
    }
}

/// Uniform draw in `[0, 1)` keyed on seed, example and prompt text.
fn keyed_uniform(seed: u64, example_id: &str, prompt: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(example_id.as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(bytes) >> 11) as f64 / (1u64 << 53) as f64
}

pub fn mock_generate(
    config: &MockOracleConfig,
    example_id: &str,
    prompt: &Prompt,
    golds: &[String],
) -> String {
    let Some(first_gold) = golds.first() else {
        return UNKNOWN_ANSWER.to_owned();
    };
    let has_gold = |doc: &String| golds.iter().any(|g| contains_normalized(doc, g));

    let answered = if prompt.context_docs.is_empty() {
        config.closed_book_known.contains(example_id)
    } else {
        prompt.context_docs.iter().any(has_gold)
    };
    if !answered {
        return UNKNOWN_ANSWER.to_owned();
    }
    if let Some(c) = config.confusion_threshold {
        let noise_docs = prompt.context_docs.iter().filter(|d| !has_gold(d)).count();
        if noise_docs >= c {
            return UNKNOWN_ANSWER.to_owned();
        }
    }
    if config.noise_rate > 0.0
        && keyed_uniform(config.seed, example_id, &prompt.text) < config.noise_rate
    {
        return WRONG_ANSWER.to_owned();
    }
    first_gold.clone()
}

#[derive(Debug, Clone)]
pub struct MockOracle {
    config: MockOracleConfig,
    fingerprint: String,
}

impl MockOracle {
    pub fn new(config: MockOracleConfig) -> Result<Self> {
        config.validate()?;
        let canonical = serde_json::to_vec(&config).expect("config serializes");
        let digest = hex::encode(Sha256::digest(&canonical));
        Ok(MockOracle {
            fingerprint: format!("mock:{}", &digest[..16]),
            config,
        })
    }

    pub fn config(&self) -> &MockOracleConfig {
        &self.config
    }
}

impl Generator for MockOracle {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String> {
        Ok(mock_generate(
            &self.config,
            request.example_id,
            request.prompt,
            request.golds,
        ))
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompt(docs: &[&str]) -> Prompt {
        Prompt {
            template_id: "default".into(),
            query: "q".into(),
            context_docs: docs.iter().map(|d| d.to_string()).collect(),
            text: docs.join("\n"),
        }
    }

    fn golds(g: &[&str]) -> Vec<String> {
        g.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn answers_from_evidence() {
        let cfg = MockOracleConfig::default();
        let out = mock_generate(
            &cfg,
            "q1",
            &prompt(&["Hamlet is a tragedy by William Shakespeare."]),
            &golds(&["Shakespeare"]),
        );
        assert_eq!(out, "Shakespeare");
    }

    #[test]
    fn unknown_without_evidence() {
        let cfg = MockOracleConfig::default();
        let out = mock_generate(
            &cfg,
            "q1",
            &prompt(&["Berlin is large.", "Rome is old."]),
            &golds(&["Paris"]),
        );
        assert_eq!(out, UNKNOWN_ANSWER);
    }

    #[test]
    fn confusion_threshold_counts_noise_docs() {
        let cfg = MockOracleConfig {
            confusion_threshold: Some(3),
            ..Default::default()
        };
        let docs = ["Paris is the capital.", "noise one", "noise two", "noise three"];
        assert_eq!(
            mock_generate(&cfg, "q", &prompt(&docs), &golds(&["Paris"])),
            UNKNOWN_ANSWER
        );
        assert_eq!(
            mock_generate(&cfg, "q", &prompt(&docs[..3]), &golds(&["Paris"])),
            "Paris"
        );
    }

    #[test]
    fn closed_book_flag() {
        let mut cfg = MockOracleConfig::default();
        assert_eq!(mock_generate(&cfg, "q1", &prompt(&[]), &golds(&["x"])), UNKNOWN_ANSWER);
        cfg.closed_book_known.insert("q1".into());
        assert_eq!(mock_generate(&cfg, "q1", &prompt(&[]), &golds(&["x"])), "x");
    }

    #[test]
    fn noise_is_deterministic_and_near_rate() {
        let cfg = MockOracleConfig {
            noise_rate: 0.3,
            seed: 11,
            ..Default::default()
        };
        let g = golds(&["alpha"]);
        let mut wrong = 0;
        for i in 0..2000 {
            let p = prompt(&[&format!("alpha doc {i}")]);
            let a = mock_generate(&cfg, "q", &p, &g);
            assert_eq!(a, mock_generate(&cfg, "q", &p, &g));
            if a == WRONG_ANSWER {
                wrong += 1;
            }
        }
        let rate = wrong as f64 / 2000.0;
        assert!((rate - 0.3).abs() < 0.04, "{rate}");
    }

    #[test]
    fn invalid_noise_rate_rejected() {
        let cfg = MockOracleConfig {
            noise_rate: 1.0,
            ..Default::default()
        };
        assert!(MockOracle::new(cfg).is_err());
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = MockOracle::new(MockOracleConfig::default()).unwrap();
        let b = MockOracle::new(MockOracleConfig {
            confusion_threshold: Some(2),
            ..Default::default()
        })
        .unwrap();
        assert!(a.fingerprint().starts_with("mock:"));
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(
            a.fingerprint(),
            MockOracle::new(MockOracleConfig::default()).unwrap().fingerprint()
        );
    }
}
