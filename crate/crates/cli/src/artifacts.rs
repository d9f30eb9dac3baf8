//! Artifact bookkeeping: sidecar metadata, run manifests and the sample file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use soliclone_core::fsutil::{read_json, to_jsonl, write_atomic, write_json};
use soliclone_core::hashing::sha256_hex;
use soliclone_core::pairs::ScoredPair;
use soliclone_core::sampling::{Sample, SamplePlan};

use crate::config::PipelineConfig;
use crate::error::CliError;

/// `<artifact>.meta.json`: what produced the artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub artifact: String,
    pub stage: String,
    pub tool_version: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    /// Input file name → SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Relative to the output directory when inside it.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// `runs/<stage>.json`, rewritten by every run of the stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub stage: String,
    pub tool_version: String,
    pub config_hash: String,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn meta_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    artifact.with_file_name(name)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| soliclone_core::Error::io(path, e))?;
    Ok(sha256_hex(bytes))
}

/// Collects the artifacts a stage writes and emits its run manifest.
pub struct Run<'c> {
    stage: String,
    config: &'c PipelineConfig,
    inputs: BTreeMap<String, String>,
    written: Vec<ArtifactEntry>,
}

impl<'c> Run<'c> {
    pub fn new(stage: &str, config: &'c PipelineConfig) -> Self {
        Run {
            stage: stage.into(),
            config,
            inputs: BTreeMap::new(),
            written: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.insert(file_name(path), file_sha256(path)?);
        Ok(())
    }

    /// Atomically writes `bytes` to `path` and its metadata sidecar.
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(path, bytes)?;
        let sha = sha256_hex(bytes);
        let meta = ArtifactMeta {
            artifact: file_name(path),
            stage: self.stage.clone(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: self.config.hash(),
            config: self.config.parameters(),
            inputs: self.inputs.clone(),
            sha256: sha.clone(),
        };
        write_json(&meta_path(path), &meta)?;
        self.written.push(ArtifactEntry {
            path: self.relative(path),
            sha256: sha,
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(
        &mut self,
        path: &Path,
        value: &T,
    ) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(soliclone_core::Error::from)?;
        bytes.push(b'\n');
        self.write(path, &bytes)
    }

    pub fn write_jsonl<T: Serialize>(
        &mut self,
        path: &Path,
        items: impl IntoIterator<Item = T>,
    ) -> Result<(), CliError> {
        let bytes = to_jsonl(items)?;
        self.write(path, &bytes)
    }

    /// Records a file written by other means (a directory-backed store).
    pub fn record(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::metadata(path)
            .map_err(|e| soliclone_core::Error::io(path, e))?
            .len();
        self.written.push(ArtifactEntry {
            path: self.relative(path),
            sha256: file_sha256(path)?,
            bytes,
        });
        Ok(())
    }

    fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.config.paths.out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned()
    }

    pub fn artifacts(&self) -> &[ArtifactEntry] {
        &self.written
    }

    pub fn finish(self) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            stage: self.stage.clone(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: self.config.hash(),
            artifacts: self.written,
        };
        let name = self.stage.replace(' ', "-");
        let path = self
            .config
            .paths
            .out_dir
            .join("runs")
            .join(format!("{name}.json"));
        write_json(&path, &manifest)?;
        Ok(manifest)
    }
}

pub fn read_meta(artifact: &Path) -> Option<ArtifactMeta> {
    read_json(&meta_path(artifact)).ok()
}

/// Sample files are JSONL: the plan on the first line, one pair per line after.
pub fn sample_bytes(sample: &Sample) -> Result<Vec<u8>, CliError> {
    let mut bytes = to_jsonl(std::iter::once(&sample.plan))?;
    bytes.extend(to_jsonl(&sample.pairs)?);
    Ok(bytes)
}

pub fn read_sample(path: &Path) -> Result<Sample, CliError> {
    let text = fs::read_to_string(path).map_err(|e| soliclone_core::Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let ctx = |n: usize| format!("{}:{n}", path.display());
    let plan: SamplePlan = serde_json::from_str(
        lines
            .next()
            .ok_or_else(|| CliError::Other(format!("{} is empty", path.display())))?,
    )
    .map_err(|e| soliclone_core::Error::json(ctx(1), e))?;
    let pairs = lines
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str::<ScoredPair>(l)
                .map_err(|e| soliclone_core::Error::json(ctx(i + 2), e).into())
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Sample { plan, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = PipelineConfig::default();
        config.paths.out_dir = dir.path().to_path_buf();
        let input = dir.path().join("in.txt");
        fs::write(&input, "abc").unwrap();
        let mut run = Run::new("extract", &config);
        run.input(&input).unwrap();
        let out = dir.path().join("functions.jsonl");
        run.write(&out, b"{}\n").unwrap();
        let manifest = run.finish().unwrap();
        assert_eq!(manifest.artifacts[0].path, "functions.jsonl");
        let meta = read_meta(&out).unwrap();
        assert_eq!(meta.config_hash, config.hash());
        assert_eq!(meta.inputs["in.txt"], sha256_hex("abc"));
        assert_eq!(meta.sha256, sha256_hex("{}\n"));
        assert!(dir.path().join("runs/extract.json").is_file());
    }
}
