use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff_ms: 1000,
        }
    }
}

pub(crate) fn api_key(env_name: &str) -> Result<String> {
    match std::env::var(env_name) {
        Ok(key) if !key.trim().is_empty() => Ok(key),
        _ => Err(Error::ProviderUnavailable(format!(
            "environment variable {env_name} is not set"
        ))),
    }
}

/// POSTs `body` as JSON, retrying transport failures, 429 and 5xx with
/// exponential backoff.
pub(crate) fn post_json(url: &str, api_key: &str, body: &Value, policy: RetryPolicy) -> Result<Value> {
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(300))
        .build()
        .map_err(|e| Error::ProviderUnavailable(e.to_string()))?;
    let mut backoff = Duration::from_millis(policy.initial_backoff_ms);
    let mut last_err = String::from("no attempts made");
    for attempt in 1..=policy.attempts.max(1) {
        let resp = client.post(url).bearer_auth(api_key).json(body).send();
        match resp {
            Ok(r) if r.status().is_success() => {
                return r
                    .json::<Value>()
                    .map_err(|e| Error::ProviderUnavailable(format!("invalid response body: {e}")));
            }
            Ok(r) => {
                let status = r.status();
                last_err = format!("HTTP {status}");
                if !(status.as_u16() == 429 || status.is_server_error()) {
                    break;
                }
            }
            Err(e) => last_err = e.to_string(),
        }
        if attempt < policy.attempts {
            log::warn!("request to {url} failed ({last_err}); retrying in {backoff:?}");
            thread::sleep(backoff);
            backoff *= 2;
        }
    }
    Err(Error::ProviderUnavailable(format!("{url}: {last_err}")))
}

/// Runs `job` over `0..n` on at most `cap` threads, keeping result order.
pub(crate) fn bounded_map<T, F>(n: usize, cap: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    thread::scope(|s| {
        for _ in 0..cap.max(1).min(n) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = job(i);
                slots.lock().expect("worker panicked")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect()
}
