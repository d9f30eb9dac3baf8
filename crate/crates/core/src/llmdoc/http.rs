use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::prompt::ChatMessage;
use super::provider::ChatProvider;
use crate::error::{Error, Result};

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    temperature: f64,
    messages: &'a [ChatMessage],
}

#[derive(Deserialize)]
struct Response {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

/// Chat-completion client (`{model, temperature, messages}` →
/// `choices[0].message.content`).
pub struct HttpChatProvider {
    endpoint: String,
    model_id: String,
    temperature: f64,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpChatProvider {
    /// Reads the API key from the environment variable `api_key_env`.
    pub fn new(
        endpoint: String,
        model_id: String,
        temperature: f64,
        api_key_env: Option<String>,
    ) -> Result<Self> {
        let api_key = match api_key_env {
            Some(var) => Some(std::env::var(&var).map_err(|_| {
                Error::InvalidArgument(format!(
                    "environment variable `{var}` holding the API key is not set"
                ))
            })?),
            None => None,
        };
        Ok(HttpChatProvider {
            endpoint,
            model_id,
            temperature,
            api_key,
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(300))
                .build()
                .expect("HTTP client configuration is static"),
        })
    }
}

impl ChatProvider for HttpChatProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String> {
        let fail = |message: String, transient: bool| Error::Provider {
            provider: format!("http:{}", self.model_id),
            message,
            transient,
        };
        let mut req = self.client.post(&self.endpoint).json(&Request {
            model: &self.model_id,
            temperature: self.temperature,
            messages,
        });
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| fail(e.to_string(), true))?;
        let status = resp.status();
        if !status.is_success() {
            let transient = status.is_server_error() || status.as_u16() == 429;
            return Err(fail(format!("HTTP {status}"), transient));
        }
        let body: Response = resp
            .json()
            .map_err(|e| fail(format!("bad response body: {e}"), false))?;
        body.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| fail("response has no choices".into(), false))
    }
}
