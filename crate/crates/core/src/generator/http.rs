//! Remote LLM client: plain JSON over HTTP POST with an on-disk response cache.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{GenerationRequest, Generator, Prompt};
use crate::error::{Error, Result};
use crate::transport::{
    post_with_retry, HttpResponse, HttpTransport, RetryPolicy, Semaphore, TransportFailure, UreqTransport,
};

/// Request/response shape spoken by the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiStyle {
    /// `{"model","prompt","temperature","max_tokens"}` → `{"text"}`
    #[default]
    Completion,
    /// `{"model","messages":[…],…}` → `{"choices":[{"message":{"content"}}]}`
    Chat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpGeneratorConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub api_key_env_var: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub max_in_flight: usize,
    pub api_style: ApiStyle,
}

impl Default for HttpGeneratorConfig {
    fn default() -> Self {
        HttpGeneratorConfig {
            endpoint_url: String::new(),
            model_name: String::new(),
            temperature: 0.0,
            max_tokens: 64,
            timeout_ms: 30_000,
            max_retries: 3,
            backoff_base_ms: 200,
            api_key_env_var: None,
            cache_dir: None,
            max_in_flight: 4,
            api_style: ApiStyle::Completion,
        }
    }
}

pub struct HttpGenerator {
    config: HttpGeneratorConfig,
    transport: Box<dyn HttpTransport>,
    in_flight: Semaphore,
    cache_writes: Mutex<()>,
    network_attempts: AtomicUsize,
    cache_hits: AtomicUsize,
}

/// Counts every attempt that reaches the wire layer.
struct Counting<'a> {
    inner: &'a dyn HttpTransport,
    attempts: &'a AtomicUsize,
}

impl HttpTransport for Counting<'_> {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Value,
        timeout: Duration,
    ) -> std::result::Result<HttpResponse, TransportFailure> {
        self.attempts.fetch_add(1, Ordering::SeqCst);
        self.inner.post_json(url, headers, body, timeout)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    model: String,
    text: String,
}

impl HttpGenerator {
    pub fn new(config: HttpGeneratorConfig) -> Self {
        Self::with_transport(config, Box::new(UreqTransport))
    }

    pub fn with_transport(config: HttpGeneratorConfig, transport: Box<dyn HttpTransport>) -> Self {
        HttpGenerator {
            in_flight: Semaphore::new(config.max_in_flight),
            config,
            transport,
            cache_writes: Mutex::new(()),
            network_attempts: AtomicUsize::new(0),
            cache_hits: AtomicUsize::new(0),
        }
    }

    pub fn config(&self) -> &HttpGeneratorConfig {
        &self.config
    }

    /// Total HTTP attempts made, retries included.
    pub fn network_attempts(&self) -> usize {
        self.network_attempts.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> usize {
        self.cache_hits.load(Ordering::SeqCst)
    }

    fn cache_path(&self, prompt: &Prompt) -> Option<PathBuf> {
        let dir = self.config.cache_dir.as_ref()?;
        let mut h = Sha256::new();
        h.update(self.config.model_name.as_bytes());
        h.update([0u8]);
        h.update(prompt.text.as_bytes());
        Some(dir.join(format!("{}.json", hex::encode(h.finalize()))))
    }

    fn read_cache(path: &Path) -> Option<String> {
        let raw = fs::read_to_string(path).ok()?;
        serde_json::from_str::<CacheEntry>(&raw).ok().map(|e| e.text)
    }

    fn write_cache(&self, path: &Path, text: &str) -> Result<()> {
        let _guard = self.cache_writes.lock().unwrap();
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let entry = CacheEntry {
            model: self.config.model_name.clone(),
            text: text.to_owned(),
        };
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec(&entry).expect("cache entry serializes"))
            .map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    fn request_body(&self, prompt: &Prompt) -> Value {
        let c = &self.config;
        match c.api_style {
            ApiStyle::Completion => json!({
                "model": c.model_name,
                "prompt": prompt.text,
                "temperature": c.temperature,
                "max_tokens": c.max_tokens,
            }),
            ApiStyle::Chat => json!({
                "model": c.model_name,
                "messages": [{"role": "user", "content": prompt.text}],
                "temperature": c.temperature,
                "max_tokens": c.max_tokens,
            }),
        }
    }

    fn extract_text(&self, status: u16, body: &str) -> Result<String> {
        let protocol = |message: &str| Error::Protocol {
            status,
            message: message.to_owned(),
        };
        let v: Value = serde_json::from_str(body).map_err(|_| protocol("response is not JSON"))?;
        let text = match self.config.api_style {
            ApiStyle::Completion => v.get("text"),
            ApiStyle::Chat => v.pointer("/choices/0/message/content"),
        };
        text.and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| protocol("response has no text field"))
    }

    fn headers(&self) -> Vec<(String, String)> {
        self.config
            .api_key_env_var
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .map(|key| vec![("authorization".to_owned(), format!("Bearer {key}"))])
            .unwrap_or_default()
    }

    pub fn generate_prompt(&self, prompt: &Prompt) -> Result<String> {
        let cache_path = self.cache_path(prompt);
        if let Some(text) = cache_path.as_deref().and_then(Self::read_cache) {
            self.cache_hits.fetch_add(1, Ordering::SeqCst);
            return Ok(text);
        }
        let policy = RetryPolicy {
            max_retries: self.config.max_retries,
            base_delay_ms: self.config.backoff_base_ms,
            ..RetryPolicy::default()
        };
        let delivered = {
            let _permit = self.in_flight.acquire();
            post_with_retry(
                &Counting {
                    inner: self.transport.as_ref(),
                    attempts: &self.network_attempts,
                },
                &self.config.endpoint_url,
                &self.headers(),
                &self.request_body(prompt),
                Duration::from_millis(self.config.timeout_ms),
                &policy,
            )?
        };
        if delivered.attempts > 1 {
            log::info!(
                "{}: succeeded after {} attempts",
                self.config.endpoint_url,
                delivered.attempts
            );
        }
        let text = self.extract_text(delivered.response.status, &delivered.response.body)?;
        if let Some(path) = cache_path {
            self.write_cache(&path, &text)?;
        }
        Ok(text)
    }
}

impl Generator for HttpGenerator {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String> {
        self.generate_prompt(request.prompt)
    }

    fn fingerprint(&self) -> String {
        format!("http:{}#{}", self.config.endpoint_url, self.config.model_name)
    }
}
