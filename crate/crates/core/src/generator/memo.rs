use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{GenerationRequest, Generator};
use crate::error::Result;

/// In-memory response cache keyed by `(example id, prompt text)` that also
/// counts requests, so callers can report generator budgets.
pub struct MemoGenerator<G> {
    inner: G,
    cache: Mutex<HashMap<(String, String), String>>,
    requests: AtomicUsize,
    hits: AtomicUsize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MemoStats {
    pub requests: usize,
    pub cache_hits: usize,
}

impl MemoStats {
    pub fn hit_rate(&self) -> f64 {
        if self.requests == 0 {
            0.0
        } else {
            self.cache_hits as f64 / self.requests as f64
        }
    }
}

impl<G: Generator> MemoGenerator<G> {
    pub fn new(inner: G) -> Self {
        MemoGenerator {
            inner,
            cache: Mutex::new(HashMap::new()),
            requests: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        }
    }

    pub fn stats(&self) -> MemoStats {
        MemoStats {
            requests: self.requests.load(Ordering::SeqCst),
            cache_hits: self.hits.load(Ordering::SeqCst),
        }
    }

    pub fn inner(&self) -> &G {
        &self.inner
    }
}

impl<G: Generator> Generator for MemoGenerator<G> {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        let key = (request.example_id.to_owned(), request.prompt.text.clone());
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            self.hits.fetch_add(1, Ordering::SeqCst);
            return Ok(hit.clone());
        }
        let out = self.inner.generate(request)?;
        self.cache.lock().unwrap().insert(key, out.clone());
        Ok(out)
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }
}
