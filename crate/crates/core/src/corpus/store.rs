use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{dedup, AddressRecord, DedupOutcome, SourceFile};
use crate::error::{Error, Result};
use crate::fsutil;

/// One line of `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file_id: String,
    pub address: Option<String>,
    pub normalized_checksum: String,
    pub byte_length: u64,
    pub retrieved_at: DateTime<Utc>,
}

#[derive(Debug, Clone)]
pub struct RetrievedSource {
    pub text: String,
    pub retrieved_at: DateTime<Utc>,
}

/// Source retrieval by contract address (the block-explorer role).
///
/// Implementations own rate limiting and credentials. Each returned blob is
/// stored as its own [`SourceFile`].
pub trait SourceFetcher: Sync {
    fn fetch(&self, address: &str) -> Result<Vec<RetrievedSource>>;
}

/// Reads `<root>/<address>.sol` or every `*.sol` under `<root>/<address>/`.
/// The retrieval time is the file's modification time.
#[derive(Debug, Clone)]
pub struct FsSourceFetcher {
    root: PathBuf,
}

impl FsSourceFetcher {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FsSourceFetcher { root: root.into() }
    }

    fn read(path: &Path) -> Result<RetrievedSource> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let retrieved_at = fs::metadata(path)
            .and_then(|m| m.modified())
            .map(DateTime::<Utc>::from)
            .map_err(|e| Error::io(path, e))?;
        Ok(RetrievedSource { text, retrieved_at })
    }
}

impl SourceFetcher for FsSourceFetcher {
    fn fetch(&self, address: &str) -> Result<Vec<RetrievedSource>> {
        let single = self.root.join(format!("{address}.sol"));
        if single.is_file() {
            return Ok(vec![Self::read(&single)?]);
        }
        let dir = self.root.join(address);
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "sol"))
            .collect();
        paths.sort();
        paths.iter().map(|p| Self::read(p)).collect()
    }
}

/// Content-addressed corpus directory:
///
/// ```text
/// <dir>/sources/<file_id>.sol
/// <dir>/manifest.jsonl
/// <dir>/addresses.jsonl
/// <dir>/duplicates.json      (after dedup)
/// ```
#[derive(Debug)]
pub struct CorpusStore {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl CorpusStore {
    pub const MANIFEST: &'static str = "manifest.jsonl";
    pub const ADDRESSES: &'static str = "addresses.jsonl";
    pub const DUPLICATES: &'static str = "duplicates.json";

    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let sources = dir.join("sources");
        fs::create_dir_all(&sources).map_err(|e| Error::io(&sources, e))?;
        let manifest = dir.join(Self::MANIFEST);
        if manifest.exists() {
            return Self::open(dir);
        }
        fsutil::write_atomic(&manifest, b"")?;
        Ok(CorpusStore {
            dir,
            entries: Vec::new(),
        })
    }

    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let entries = fsutil::read_jsonl(&dir.join(Self::MANIFEST))?;
        Ok(CorpusStore { dir, entries })
    }

    pub fn exists(dir: &Path) -> bool {
        dir.join(Self::MANIFEST).is_file()
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    fn source_path(&self, file_id: &str) -> PathBuf {
        self.dir.join("sources").join(format!("{file_id}.sol"))
    }

    /// Stores a file unless its file_id is already present. Returns whether
    /// it was added.
    pub fn add(&mut self, file: &SourceFile, retrieved_at: DateTime<Utc>) -> Result<bool> {
        if self.entries.iter().any(|e| e.file_id == file.file_id) {
            return Ok(false);
        }
        fsutil::write_atomic(&self.source_path(&file.file_id), file.raw_text.as_bytes())?;
        let entry = ManifestEntry {
            file_id: file.file_id.clone(),
            address: file.address.clone(),
            normalized_checksum: file.normalized_checksum.clone(),
            byte_length: file.raw_text.len() as u64,
            retrieved_at,
        };
        fsutil::append_jsonl(&self.dir.join(Self::MANIFEST), &entry)?;
        self.entries.push(entry);
        Ok(true)
    }

    /// Loads every manifest entry's source, in manifest order.
    pub fn load_files(&self) -> Result<Vec<SourceFile>> {
        self.entries
            .iter()
            .map(|e| {
                let path = self.source_path(&e.file_id);
                let text = fs::read_to_string(&path).map_err(|err| Error::io(&path, err))?;
                let file = SourceFile::new(text, e.address.clone());
                if file.file_id != e.file_id {
                    return Err(Error::Contract(format!(
                        "source {} does not match its content address",
                        path.display()
                    )));
                }
                Ok(file)
            })
            .collect()
    }

    /// Deduplicates the stored files and rewrites the manifest with survivors
    /// only (sorted by file_id). Collapsed groups go to `duplicates.json`,
    /// merged with any groups recorded by earlier runs.
    pub fn apply_dedup(&mut self) -> Result<DedupOutcome> {
        let outcome = dedup(self.load_files()?);
        let keep: BTreeSet<&str> = outcome.unique.iter().map(|f| f.file_id.as_str()).collect();
        let mut entries: Vec<ManifestEntry> = self
            .entries
            .iter()
            .filter(|e| keep.contains(e.file_id.as_str()))
            .cloned()
            .collect();
        entries.sort_by(|a, b| a.file_id.cmp(&b.file_id));
        entries.dedup_by(|a, b| a.file_id == b.file_id);
        fsutil::write_jsonl(&self.dir.join(Self::MANIFEST), &entries)?;
        self.entries = entries;

        let dup_path = self.dir.join(Self::DUPLICATES);
        let mut groups: Vec<super::DuplicateGroup> = if dup_path.exists() {
            fsutil::read_json(&dup_path)?
        } else {
            Vec::new()
        };
        groups.extend(outcome.duplicate_groups.iter().cloned());
        groups.sort_by(|a, b| a.normalized_checksum.cmp(&b.normalized_checksum));
        fsutil::write_json(&dup_path, &groups)?;
        Ok(outcome)
    }

    pub fn write_addresses(&self, records: &[AddressRecord]) -> Result<()> {
        fsutil::write_jsonl(&self.dir.join(Self::ADDRESSES), records)
    }

    pub fn read_addresses(&self) -> Result<Vec<AddressRecord>> {
        let path = self.dir.join(Self::ADDRESSES);
        if !path.exists() {
            return Ok(Vec::new());
        }
        fsutil::read_jsonl(&path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn store_roundtrip_and_dedup() {
        let tmp = tempfile::tempdir().unwrap();
        let t = Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap();
        let mut store = CorpusStore::create(tmp.path().join("c")).unwrap();
        let a = SourceFile::new("contract A { }", Some("0x01".into()));
        let b = SourceFile::new("contract  A {\n}", Some("0x02".into()));
        let c = SourceFile::new("contract B { }", None);
        assert!(store.add(&a, t).unwrap());
        assert!(!store.add(&a, t).unwrap());
        store.add(&b, t).unwrap();
        store.add(&c, t).unwrap();

        let reopened = CorpusStore::open(tmp.path().join("c")).unwrap();
        assert_eq!(reopened.entries().len(), 3);
        assert_eq!(reopened.load_files().unwrap()[1], b);

        let mut store = reopened;
        let out = store.apply_dedup().unwrap();
        assert_eq!(out.unique.len(), 2);
        assert_eq!(store.entries().len(), 2);
        let checksums: BTreeSet<_> = store
            .entries()
            .iter()
            .map(|e| &e.normalized_checksum)
            .collect();
        assert_eq!(checksums.len(), 2);

        // second pass is a no-op on the manifest
        let before = fs::read(tmp.path().join("c").join(CorpusStore::MANIFEST)).unwrap();
        let again = store.apply_dedup().unwrap();
        assert!(again.duplicate_groups.is_empty());
        let after = fs::read(tmp.path().join("c").join(CorpusStore::MANIFEST)).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn fs_fetcher_single_and_multi() {
        let tmp = tempfile::tempdir().unwrap();
        fs::write(tmp.path().join("0xaa.sol"), "contract A {}").unwrap();
        fs::create_dir(tmp.path().join("0xbb")).unwrap();
        fs::write(tmp.path().join("0xbb").join("b.sol"), "contract B {}").unwrap();
        fs::write(tmp.path().join("0xbb").join("a.sol"), "contract C {}").unwrap();
        fs::write(tmp.path().join("0xbb").join("notes.txt"), "x").unwrap();
        let f = FsSourceFetcher::new(tmp.path());
        assert_eq!(f.fetch("0xaa").unwrap().len(), 1);
        let multi = f.fetch("0xbb").unwrap();
        assert_eq!(multi.len(), 2);
        assert_eq!(multi[0].text, "contract C {}");
        assert!(f.fetch("0xcc").unwrap().is_empty());
    }
}
