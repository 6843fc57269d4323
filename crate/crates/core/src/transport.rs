//! Blocking JSON-over-HTTP with bounded concurrency and exponential-backoff
//! retries. The [`HttpTransport`] trait lets callers swap the wire layer.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Failure below the HTTP layer: connection refused, timeout, DNS, etc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportFailure(pub String);

pub trait HttpTransport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Value,
        timeout: Duration,
    ) -> std::result::Result<HttpResponse, TransportFailure>;
}

impl<T: HttpTransport + ?Sized> HttpTransport for std::sync::Arc<T> {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Value,
        timeout: Duration,
    ) -> std::result::Result<HttpResponse, TransportFailure> {
        (**self).post_json(url, headers, body, timeout)
    }
}

/// [`HttpTransport`] backed by a `ureq` agent.
#[derive(Debug, Default, Clone)]
pub struct UreqTransport;

impl HttpTransport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &Value,
        timeout: Duration,
    ) -> std::result::Result<HttpResponse, TransportFailure> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(url).header("content-type", "application/json");
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let mut resp = req
            .send(body.to_string())
            .map_err(|e| TransportFailure(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportFailure(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Additional attempts after the first.
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 200,
            max_delay_ms: 10_000,
        }
    }
}

impl RetryPolicy {
    /// Sleep before retry number `attempt` (1-based): base · 2^(attempt-1), capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u64 << attempt.saturating_sub(1).min(20);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

fn excerpt(body: &str) -> String {
    const MAX: usize = 200;
    match body.char_indices().nth(MAX) {
        Some((idx, _)) => format!("{}…", &body[..idx]),
        None => body.to_owned(),
    }
}

fn retryable(status: u16) -> bool {
    status == 408 || status == 429 || (500..600).contains(&status)
}

fn status_error(resp: &HttpResponse) -> Error {
    let message = match resp.status {
        401 => "unauthorized".to_owned(),
        403 => "forbidden".to_owned(),
        _ => excerpt(&resp.body),
    };
    Error::Protocol {
        status: resp.status,
        message,
    }
}

/// Outcome of [`post_with_retry`]: the successful response and how many
/// attempts it took.
#[derive(Debug, Clone)]
pub struct Delivered {
    pub response: HttpResponse,
    pub attempts: u32,
}

/// POST with retries on transport failures, 408, 429 and 5xx. Any other
/// non-2xx status fails immediately.
pub fn post_with_retry(
    transport: &dyn HttpTransport,
    url: &str,
    headers: &[(String, String)],
    body: &Value,
    timeout: Duration,
    policy: &RetryPolicy,
) -> Result<Delivered> {
    let mut last_err = Error::Transport("no attempt made".into());
    for attempt in 0..=policy.max_retries {
        if attempt > 0 {
            std::thread::sleep(policy.delay(attempt));
        }
        match transport.post_json(url, headers, body, timeout) {
            Ok(resp) if (200..300).contains(&resp.status) => {
                log::debug!("POST {url}: status {} after {} attempt(s)", resp.status, attempt + 1);
                return Ok(Delivered {
                    response: resp,
                    attempts: attempt + 1,
                });
            }
            Ok(resp) if retryable(resp.status) => {
                log::warn!("POST {url}: attempt {} got status {}", attempt + 1, resp.status);
                last_err = status_error(&resp);
            }
            Ok(resp) => return Err(status_error(&resp)),
            Err(TransportFailure(msg)) => {
                log::warn!("POST {url}: attempt {} failed: {msg}", attempt + 1);
                last_err = Error::Transport(msg);
            }
        }
    }
    Err(last_err)
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
pub struct Semaphore {
    permits: Mutex<usize>,
    freed: Condvar,
}

pub struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits.max(1)),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.permits.lock().unwrap();
        while *n == 0 {
            n = self.freed.wait(n).unwrap();
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().unwrap() += 1;
        self.0.freed.notify_one();
    }
}


#[cfg(test)]
mod tests {
    use super::testing::ScriptedTransport;
    use super::*;

    fn fast() -> RetryPolicy {
        RetryPolicy {
            max_retries: 2,
            base_delay_ms: 1,
            max_delay_ms: 5,
        }
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy {
            max_retries: 10,
            base_delay_ms: 100,
            max_delay_ms: 1000,
        };
        let delays: Vec<u64> = (1..=6).map(|a| p.delay(a).as_millis() as u64).collect();
        assert_eq!(delays, [100, 200, 400, 800, 1000, 1000]);
    }

    #[test]
    fn retries_server_error_then_succeeds() {
        let t = ScriptedTransport::new([
            ScriptedTransport::ok(500, "boom"),
            ScriptedTransport::ok(200, "{}"),
        ]);
        let d = post_with_retry(&t, "http://x", &[], &Value::Null, Duration::from_secs(1), &fast())
            .unwrap();
        assert_eq!(d.attempts, 2);
        assert_eq!(t.calls(), 2);
    }

    #[test]
    fn unauthorized_is_not_retried() {
        let t = ScriptedTransport::new([ScriptedTransport::ok(401, "nope")]);
        let err = post_with_retry(&t, "http://x", &[], &Value::Null, Duration::from_secs(1), &fast())
            .unwrap_err();
        assert!(matches!(err, Error::Protocol { status: 401, ref message } if message == "unauthorized"));
        assert_eq!(t.calls(), 1);
    }

    #[test]
    fn exhausted_transport_failures() {
        let t = ScriptedTransport::new([
            Err(TransportFailure("timed out".into())),
            Err(TransportFailure("timed out".into())),
            Err(TransportFailure("timed out".into())),
        ]);
        let err = post_with_retry(&t, "http://x", &[], &Value::Null, Duration::from_secs(1), &fast())
            .unwrap_err();
        assert!(matches!(err, Error::Transport(_)));
        assert_eq!(t.calls(), 3);
    }

    #[test]
    fn protocol_error_carries_body_excerpt() {
        let body = "x".repeat(500);
        let t = ScriptedTransport::new([ScriptedTransport::ok(400, &body)]);
        let err = post_with_retry(&t, "http://x", &[], &Value::Null, Duration::from_secs(1), &fast())
            .unwrap_err();
        match err {
            Error::Protocol { status, message } => {
                assert_eq!(status, 400);
                assert!(message.chars().count() <= 201);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn semaphore_bounds_concurrency() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let sem = Semaphore::new(2);
        let live = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    let _p = sem.acquire();
                    let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(5));
                    live.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
