use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::EmbeddingProvider;
use crate::error::{Error, Result};

#[derive(Serialize)]
struct Request<'a> {
    texts: &'a [String],
    model_id: &'a str,
}

#[derive(Deserialize)]
struct Response {
    vectors: Vec<Vec<f64>>,
}

/// `POST {texts, model_id}` → `{vectors}`.
pub struct HttpEmbeddingProvider {
    endpoint: String,
    model_id: String,
    client: reqwest::blocking::Client,
}

impl HttpEmbeddingProvider {
    pub fn new(endpoint: impl Into<String>, model_id: impl Into<String>) -> Self {
        HttpEmbeddingProvider {
            endpoint: endpoint.into(),
            model_id: model_id.into(),
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .expect("HTTP client configuration is static"),
        }
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn provider_id(&self) -> String {
        format!("external:{}", self.model_id)
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let fail = |message: String, transient: bool| Error::Provider {
            provider: self.provider_id(),
            message,
            transient,
        };
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&Request {
                texts,
                model_id: &self.model_id,
            })
            .send()
            .map_err(|e| fail(e.to_string(), true))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(fail(format!("HTTP {status}"), status.is_server_error()));
        }
        let body: Response = resp
            .json()
            .map_err(|e| fail(format!("bad response body: {e}"), false))?;
        Ok(body.vectors)
    }
}
