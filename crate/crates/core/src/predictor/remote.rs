//! Client for a compression-rate predictor served over HTTP:
//! POST `{"query","docs","N"}` → `{"k"}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::baseline::CompressionRatePredictor;
use crate::dataset::{CompressionLabel, QaExample, RetrievalSet};
use crate::error::{Error, Result};
use crate::transport::{post_with_retry, HttpTransport, RetryPolicy, UreqTransport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemotePredictorConfig {
    pub endpoint_url: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    /// On transport failure return `K(N)` instead of an error.
    pub fallback_to_n: bool,
}

impl Default for RemotePredictorConfig {
    fn default() -> Self {
        RemotePredictorConfig {
            endpoint_url: String::new(),
            timeout_ms: 10_000,
            max_retries: 2,
            backoff_base_ms: 200,
            fallback_to_n: false,
        }
    }
}

pub struct RemotePredictor {
    config: RemotePredictorConfig,
    transport: Box<dyn HttpTransport>,
}

impl RemotePredictor {
    pub fn new(config: RemotePredictorConfig) -> Self {
        Self::with_transport(config, Box::new(UreqTransport))
    }

    pub fn with_transport(config: RemotePredictorConfig, transport: Box<dyn HttpTransport>) -> Self {
        RemotePredictor { config, transport }
    }

    fn parse(status: u16, body: &str, n: usize) -> Result<CompressionLabel> {
        let protocol = |message: String| Error::Protocol { status, message };
        let value: Value = serde_json::from_str(body).map_err(|e| protocol(format!("invalid JSON: {e}")))?;
        let k = value
            .get("k")
            .and_then(Value::as_u64)
            .ok_or_else(|| protocol("response lacks a non-negative integer `k`".into()))?;
        if k as usize > n {
            return Err(protocol(format!("k = {k} out of range 0..={n}")));
        }
        Ok(CompressionLabel::K(k as usize))
    }
}

impl CompressionRatePredictor for RemotePredictor {
    fn predict(&self, example: &QaExample, retrieval: &RetrievalSet) -> Result<CompressionLabel> {
        let n = retrieval.len();
        let body = json!({
            "query": example.full_query(),
            "docs": retrieval.docs().iter().map(|d| d.text.as_str()).collect::<Vec<_>>(),
            "N": n,
        });
        let policy = RetryPolicy {
            max_retries: self.config.max_retries,
            base_delay_ms: self.config.backoff_base_ms,
            ..Default::default()
        };
        let headers = [("Content-Type".to_owned(), "application/json".to_owned())];
        match post_with_retry(
            self.transport.as_ref(),
            &self.config.endpoint_url,
            &headers,
            &body,
            Duration::from_millis(self.config.timeout_ms),
            &policy,
        ) {
            Ok(d) => Self::parse(d.response.status, &d.response.body, n),
            Err(Error::Transport(msg)) if self.config.fallback_to_n => {
                log::warn!("remote predictor unreachable for {} ({msg}); using k = {n}", example.id);
                Ok(CompressionLabel::K(n))
            }
            Err(e) => Err(e),
        }
    }
}
