use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fsutil;
use crate::hashing::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCacheEntry {
    pub content_hash: String,
    pub provider_id: String,
    pub vector: Vec<f64>,
}

/// `(content_hash, provider_id) -> vector`, persisted as JSONL.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingCache {
    entries: BTreeMap<(String, String), Vec<f64>>,
}

impl EmbeddingCache {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cache = EmbeddingCache::default();
        if path.exists() {
            for e in fsutil::read_jsonl::<EmbeddingCacheEntry>(path)? {
                cache
                    .entries
                    .insert((e.content_hash, e.provider_id), e.vector);
            }
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsutil::write_jsonl(
            path,
            self.entries.iter().map(|((h, p), v)| EmbeddingCacheEntry {
                content_hash: h.clone(),
                provider_id: p.clone(),
                vector: v.clone(),
            }),
        )
    }

    pub fn key(text: &str) -> String {
        sha256_hex(text.as_bytes())
    }

    pub fn get(&self, text: &str, provider_id: &str) -> Option<&Vec<f64>> {
        self.entries
            .get(&(Self::key(text), provider_id.to_string()))
    }

    pub fn insert(&mut self, text: &str, provider_id: &str, vector: Vec<f64>) {
        self.entries
            .insert((Self::key(text), provider_id.to_string()), vector);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
