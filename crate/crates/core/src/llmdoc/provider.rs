use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::prompt::{ChatMessage, SUMMARY_PROMPT_PREFIX};
use crate::embed::baseline::comment_words;
use crate::error::{Error, Result};
use crate::fsutil::{append_jsonl, read_jsonl};
use crate::hashing::sha256_hex;

/// A chat-completion backend.
pub trait ChatProvider: Send + Sync {
    fn model_id(&self) -> &str;
    fn temperature(&self) -> f64 {
        0.0
    }
    fn complete(&self, messages: &[ChatMessage]) -> Result<String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Stub,
    Http,
    Replay,
}

impl std::str::FromStr for ProviderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stub" => Ok(ProviderKind::Stub),
            "http" => Ok(ProviderKind::Http),
            "replay" => Ok(ProviderKind::Replay),
            other => Err(Error::InvalidArgument(format!(
                "unknown provider `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmProviderSpec {
    pub kind: ProviderKind,
    pub endpoint: Option<String>,
    pub model_id: String,
    pub temperature: f64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    /// Recorded exchanges for the replay provider.
    pub replay_path: Option<PathBuf>,
    pub max_in_flight: usize,
    pub retries: u32,
    pub backoff_ms: u64,
}

impl Default for LlmProviderSpec {
    fn default() -> Self {
        LlmProviderSpec {
            kind: ProviderKind::Stub,
            endpoint: None,
            model_id: "stub".into(),
            temperature: 0.0,
            api_key_env: None,
            replay_path: None,
            max_in_flight: 4,
            retries: 3,
            backoff_ms: 500,
        }
    }
}

impl LlmProviderSpec {
    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            retries: self.retries,
            base_delay: Duration::from_millis(self.backoff_ms),
        }
    }
}

pub fn build_provider(spec: &LlmProviderSpec) -> Result<Box<dyn ChatProvider>> {
    match spec.kind {
        ProviderKind::Stub => Ok(Box::new(StubProvider::new(spec.model_id.clone()))),
        ProviderKind::Replay => {
            let path = spec.replay_path.as_ref().ok_or_else(|| {
                Error::InvalidArgument("the replay provider needs `replay_path`".into())
            })?;
            Ok(Box::new(ReplayProvider::load(
                path,
                spec.model_id.clone(),
                spec.temperature,
            )?))
        }
        ProviderKind::Http => {
            #[cfg(feature = "http")]
            {
                let endpoint = spec.endpoint.clone().ok_or_else(|| {
                    Error::InvalidArgument("the http provider needs an endpoint".into())
                })?;
                Ok(Box::new(super::http::HttpChatProvider::new(
                    endpoint,
                    spec.model_id.clone(),
                    spec.temperature,
                    spec.api_key_env.clone(),
                )?))
            }
            #[cfg(not(feature = "http"))]
            {
                Err(Error::InvalidArgument(
                    "built without the `http` feature".into(),
                ))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy {
            retries: 0,
            base_delay: Duration::ZERO,
        }
    }

    /// Calls the provider, retrying transient failures with exponential
    /// backoff.
    pub fn complete(
        &self,
        provider: &dyn ChatProvider,
        messages: &[ChatMessage],
    ) -> Result<String> {
        let mut attempt = 0;
        loop {
            match provider.complete(messages) {
                Err(Error::Provider {
                    transient: true, ..
                }) if attempt < self.retries => {
                    std::thread::sleep(self.base_delay * 2u32.pow(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// Deterministic offline provider. Summary prompts are answered with the
/// sorted vocabulary of the code; the clone question with "NO"; explicit
/// replies registered with [`StubProvider::reply`] take precedence.
pub struct StubProvider {
    model_id: String,
    replies: BTreeMap<String, String>,
    failures: Mutex<BTreeMap<String, (u32, bool)>>,
    calls: AtomicUsize,
}

impl StubProvider {
    pub fn new(model_id: impl Into<String>) -> Self {
        StubProvider {
            model_id: model_id.into(),
            replies: BTreeMap::new(),
            failures: Mutex::new(BTreeMap::new()),
            calls: AtomicUsize::new(0),
        }
    }

    /// Answers `reply` whenever the last message contains `needle`.
    pub fn reply(mut self, needle: impl Into<String>, reply: impl Into<String>) -> Self {
        self.replies.insert(needle.into(), reply.into());
        self
    }

    /// Fails the next `times` requests whose last message contains `needle`.
    pub fn fail(self, needle: impl Into<String>, times: u32, transient: bool) -> Self {
        self.failures
            .lock()
            .expect("stub lock")
            .insert(needle.into(), (times, transient));
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn default_summary(code: &str) -> String {
        let mut words = comment_words(code);
        words.sort();
        words.dedup();
        format!("Summary: {}.", words.join(" "))
    }
}

impl ChatProvider for StubProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let last = messages.last().map(|m| m.content.as_str()).unwrap_or("");
        {
            let mut failures = self.failures.lock().expect("stub lock");
            if let Some((needle, (left, transient))) =
                failures.iter_mut().find(|(n, _)| last.contains(n.as_str()))
            {
                if *left > 0 {
                    *left -= 1;
                    return Err(Error::Provider {
                        provider: format!("stub:{}", self.model_id),
                        message: format!("injected failure for `{needle}`"),
                        transient: *transient,
                    });
                }
            }
        }
        if let Some(reply) = self
            .replies
            .iter()
            .find(|(n, _)| last.contains(n.as_str()))
            .map(|(_, r)| r)
        {
            return Ok(reply.clone());
        }
        match last.strip_prefix(SUMMARY_PROMPT_PREFIX) {
            Some(rest) => Ok(Self::default_summary(
                rest.split('\n').next().unwrap_or(rest),
            )),
            None => Ok("NO".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub request_key: String,
    pub model_id: String,
    pub messages: Vec<ChatMessage>,
    pub response: String,
}

pub fn request_key(model_id: &str, temperature: f64, messages: &[ChatMessage]) -> String {
    let body =
        serde_json::to_string(&(model_id, temperature, messages)).expect("messages serialize");
    sha256_hex(body.as_bytes())
}

/// Answers from previously recorded exchanges; unknown requests fail.
pub struct ReplayProvider {
    model_id: String,
    temperature: f64,
    exchanges: BTreeMap<String, String>,
}

impl ReplayProvider {
    pub fn load(path: &Path, model_id: String, temperature: f64) -> Result<Self> {
        let exchanges = read_jsonl::<Exchange>(path)?
            .into_iter()
            .map(|e| (e.request_key, e.response))
            .collect();
        Ok(ReplayProvider {
            model_id,
            temperature,
            exchanges,
        })
    }
}

impl ChatProvider for ReplayProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String> {
        let key = request_key(&self.model_id, self.temperature, messages);
        self.exchanges
            .get(&key)
            .cloned()
            .ok_or_else(|| Error::Provider {
                provider: format!("replay:{}", self.model_id),
                message: format!("no recorded response for request {key}"),
                transient: false,
            })
    }
}

/// Forwards to another provider and appends every exchange to a log that
/// [`ReplayProvider`] can serve later.
pub struct RecordingProvider<P> {
    inner: P,
    path: PathBuf,
    lock: Mutex<()>,
}

impl<P: ChatProvider> RecordingProvider<P> {
    pub fn new(inner: P, path: impl Into<PathBuf>) -> Self {
        RecordingProvider {
            inner,
            path: path.into(),
            lock: Mutex::new(()),
        }
    }
}

impl<P: ChatProvider> ChatProvider for RecordingProvider<P> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn temperature(&self) -> f64 {
        self.inner.temperature()
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String> {
        let response = self.inner.complete(messages)?;
        let _guard = self.lock.lock().expect("recording lock");
        append_jsonl(
            &self.path,
            &Exchange {
                request_key: request_key(self.model_id(), self.temperature(), messages),
                model_id: self.model_id().to_string(),
                messages: messages.to_vec(),
                response: response.clone(),
            },
        )?;
        Ok(response)
    }
}
