//! Code and comment embeddings and the two similarity measures.

pub mod baseline;
mod cache;
#[cfg(feature = "http")]
mod http;
mod similarity;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractor::FunctionRecord;
use crate::par::Execution;

pub use cache::{EmbeddingCache, EmbeddingCacheEntry};
#[cfg(feature = "http")]
pub use http::HttpEmbeddingProvider;
pub use similarity::{
    code_similarity, code_similarity_raw, comment_similarity, comment_similarity_raw,
};
pub(crate) use similarity::{code_similarity_normed, comment_similarity_normed, norm, sq_norm};

pub const DEFAULT_CODE_DIM: usize = 128;
pub const DEFAULT_COMMENT_DIM: usize = 384;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub values: Vec<f64>,
    pub dim: usize,
    pub provider_id: String,
    /// Zero vector: the input had nothing to embed.
    #[serde(default)]
    pub degenerate: bool,
}

impl Embedding {
    pub fn new(values: Vec<f64>, provider_id: impl Into<String>) -> Result<Self> {
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::Contract(format!(
                "embedding component {i} is not finite"
            )));
        }
        Ok(Embedding {
            dim: values.len(),
            degenerate: values.iter().all(|x| *x == 0.0),
            values,
            provider_id: provider_id.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    CodeBaseline,
    CommentBaseline,
    External,
}

impl fmt::Display for EmbedderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbedderKind::CodeBaseline => "code_baseline",
            EmbedderKind::CommentBaseline => "comment_baseline",
            EmbedderKind::External => "external",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderSpec {
    pub kind: EmbedderKind,
    pub model_id: String,
    pub dim: usize,
    /// HTTP endpoint of an external provider.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Maximum concurrent requests to an external provider.
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_in_flight() -> usize {
    4
}

impl EmbedderSpec {
    pub fn code_baseline() -> Self {
        EmbedderSpec {
            kind: EmbedderKind::CodeBaseline,
            model_id: "hashed-subword-3-5".into(),
            dim: DEFAULT_CODE_DIM,
            endpoint: None,
            max_in_flight: default_in_flight(),
        }
    }

    pub fn comment_baseline() -> Self {
        EmbedderSpec {
            kind: EmbedderKind::CommentBaseline,
            model_id: "hashed-tf".into(),
            dim: DEFAULT_COMMENT_DIM,
            endpoint: None,
            max_in_flight: default_in_flight(),
        }
    }

    pub fn external(model_id: impl Into<String>, dim: usize, endpoint: impl Into<String>) -> Self {
        EmbedderSpec {
            kind: EmbedderKind::External,
            model_id: model_id.into(),
            dim,
            endpoint: Some(endpoint.into()),
            max_in_flight: default_in_flight(),
        }
    }

    pub fn provider_id(&self) -> String {
        format!("{}:{}:{}", self.kind, self.model_id, self.dim)
    }
}

/// A remote embedding model.
pub trait EmbeddingProvider: Send + Sync {
    fn provider_id(&self) -> String;
    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Code,
    Comment,
}

/// Embeds code or comment text according to an [`EmbedderSpec`].
pub struct Embedder {
    spec: EmbedderSpec,
    provider: Option<Box<dyn EmbeddingProvider>>,
}

impl fmt::Debug for Embedder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Embedder")
            .field("spec", &self.spec)
            .finish_non_exhaustive()
    }
}

impl Embedder {
    /// Builds an embedder; external specs get an HTTP provider for their endpoint.
    pub fn new(spec: EmbedderSpec) -> Result<Self> {
        if spec.dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dim must be positive".into(),
            ));
        }
        let provider: Option<Box<dyn EmbeddingProvider>> = match spec.kind {
            EmbedderKind::External => {
                #[cfg(feature = "http")]
                {
                    let endpoint = spec.endpoint.clone().ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "external embedder `{}` needs an endpoint",
                            spec.model_id
                        ))
                    })?;
                    Some(Box::new(HttpEmbeddingProvider::new(
                        endpoint,
                        spec.model_id.clone(),
                    )))
                }
                #[cfg(not(feature = "http"))]
                {
                    return Err(Error::InvalidArgument(
                        "external embedders need the `http` feature or an explicit provider".into(),
                    ));
                }
            }
            _ => None,
        };
        Ok(Embedder { spec, provider })
    }

    pub fn with_provider(spec: EmbedderSpec, provider: Box<dyn EmbeddingProvider>) -> Self {
        Embedder {
            spec,
            provider: Some(provider),
        }
    }

    pub fn spec(&self) -> &EmbedderSpec {
        &self.spec
    }

    pub fn provider_id(&self) -> String {
        match &self.provider {
            Some(p) => p.provider_id(),
            None => self.spec.provider_id(),
        }
    }

    fn check_role(&self, role: Role) -> Result<()> {
        let ok = matches!(
            (self.spec.kind, role),
            (EmbedderKind::External, _)
                | (EmbedderKind::CodeBaseline, Role::Code)
                | (EmbedderKind::CommentBaseline, Role::Comment)
        );
        if ok {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "{} embedder cannot embed {}",
                self.spec.kind,
                if role == Role::Code {
                    "code"
                } else {
                    "comments"
                }
            )))
        }
    }

    fn embed_batch(&self, texts: &[String], role: Role, exec: Execution) -> Result<Vec<Embedding>> {
        self.check_role(role)?;
        let id = self.provider_id();
        match (&self.provider, role) {
            (None, Role::Code) => exec
                .map(texts, |t| {
                    Embedding::new(baseline::code_vector(t, self.spec.dim), id.clone())
                })
                .into_iter()
                .collect(),
            (None, Role::Comment) => exec
                .map(texts, |t| {
                    Embedding::new(baseline::comment_vector(t, self.spec.dim), id.clone())
                })
                .into_iter()
                .collect(),
            (Some(provider), _) => {
                let chunk = texts.len().div_ceil(self.spec.max_in_flight.max(1)).max(1);
                let chunks: Vec<&[String]> = texts.chunks(chunk).collect();
                let results = exec.map(&chunks, |c| provider.embed_texts(c));
                let mut out = Vec::with_capacity(texts.len());
                for (c, r) in chunks.iter().zip(results) {
                    let vectors = r?;
                    if vectors.len() != c.len() {
                        return Err(Error::Contract(format!(
                            "provider `{id}` returned {} vectors for {} texts",
                            vectors.len(),
                            c.len()
                        )));
                    }
                    for v in vectors {
                        if v.len() != self.spec.dim {
                            return Err(Error::DimensionMismatch {
                                expected: self.spec.dim,
                                actual: v.len(),
                            });
                        }
                        out.push(Embedding::new(v, id.clone())?);
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn embed_code(&self, record: &FunctionRecord) -> Result<Embedding> {
        self.embed_code_text(&record.function_code)
    }

    pub fn embed_code_text(&self, code: &str) -> Result<Embedding> {
        let mut v = self.embed_batch(&[code.to_string()], Role::Code, Execution::Sequential)?;
        Ok(v.remove(0))
    }

    pub fn embed_comment(&self, text: &str) -> Result<Embedding> {
        let mut v = self.embed_batch(&[text.to_string()], Role::Comment, Execution::Sequential)?;
        Ok(v.remove(0))
    }

    pub fn embed_code_batch(
        &self,
        records: &[FunctionRecord],
        exec: Execution,
    ) -> Result<Vec<Embedding>> {
        let texts: Vec<String> = records.iter().map(|r| r.function_code.clone()).collect();
        self.embed_batch(&texts, Role::Code, exec)
    }

    pub fn embed_comment_batch(&self, texts: &[String], exec: Execution) -> Result<Vec<Embedding>> {
        self.embed_batch(texts, Role::Comment, exec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct FixedDim {
        dim: usize,
        calls: AtomicUsize,
    }

    impl EmbeddingProvider for FixedDim {
        fn provider_id(&self) -> String {
            "fixed".into()
        }
        fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(texts
                .iter()
                .map(|t| vec![t.len() as f64; self.dim])
                .collect())
        }
    }

    #[test]
    fn baseline_is_deterministic() {
        let e = Embedder::new(EmbedderSpec::code_baseline()).unwrap();
        let a = e.embed_code_text("function f() public { x = 1; }").unwrap();
        let b = e.embed_code_text("function f() public { x = 1; }").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim, DEFAULT_CODE_DIM);
        assert!(!a.degenerate);
    }

    #[test]
    fn empty_code_is_degenerate() {
        let e = Embedder::new(EmbedderSpec::code_baseline()).unwrap();
        let z = e.embed_code_text("").unwrap();
        assert!(z.degenerate);
        assert!(z.values.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn comment_baseline_distinguishes_tokens() {
        let e = Embedder::new(EmbedderSpec::comment_baseline()).unwrap();
        let inc = e.embed_comment("increase allowance").unwrap();
        let dec = e.embed_comment("decrease allowance").unwrap();
        let s = comment_similarity(&inc, &dec).unwrap();
        assert!(s < 1.0 && s > 0.0, "{s}");
        assert_eq!(
            comment_similarity(&inc, &e.embed_comment("Increase allowance.").unwrap()).unwrap(),
            1.0
        );
    }

    #[test]
    fn role_mismatch_is_contract_error() {
        let e = Embedder::new(EmbedderSpec::comment_baseline()).unwrap();
        assert!(matches!(e.embed_code_text("x"), Err(Error::Contract(_))));
    }

    #[test]
    fn external_dimension_is_checked() {
        let spec = EmbedderSpec::external("m", 4, "http://unused");
        let ok = Embedder::with_provider(
            spec.clone(),
            Box::new(FixedDim {
                dim: 4,
                calls: AtomicUsize::new(0),
            }),
        );
        assert_eq!(ok.embed_comment("abc").unwrap().values, vec![3.0; 4]);
        let bad = Embedder::with_provider(
            spec,
            Box::new(FixedDim {
                dim: 3,
                calls: AtomicUsize::new(0),
            }),
        );
        assert!(matches!(
            bad.embed_comment("abc"),
            Err(Error::DimensionMismatch {
                expected: 4,
                actual: 3
            })
        ));
    }

    #[test]
    fn external_batches_respect_in_flight_chunks() {
        let mut spec = EmbedderSpec::external("m", 2, "http://unused");
        spec.max_in_flight = 3;
        let provider = FixedDim {
            dim: 2,
            calls: AtomicUsize::new(0),
        };
        let e = Embedder::with_provider(spec, Box::new(provider));
        let texts: Vec<String> = (0..10).map(|i| "x".repeat(i + 1)).collect();
        for exec in Execution::available() {
            let out = e.embed_comment_batch(&texts, exec).unwrap();
            assert_eq!(out.len(), 10);
            assert_eq!(out[9].values, vec![10.0, 10.0]);
        }
    }
}
