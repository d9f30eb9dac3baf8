//! Contract corpus curation: address lists, activity filtering, whitespace-
//! insensitive deduplication and dataset statistics.

mod stats;
mod store;

use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::{md5_hex, sha256_hex};

pub use stats::{corpus_stats, DatasetStats, LengthStats, VersionShare};
pub use store::{CorpusStore, FsSourceFetcher, ManifestEntry, RetrievedSource, SourceFetcher};

pub const DEFAULT_MIN_TX: u64 = 10;

/// 2024-01-01T00:00:00Z, the default activity cutoff.
pub fn default_cutoff() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

/// One row of an exported address/activity list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressRecord {
    pub address: String,
    pub tx_count: u64,
    pub last_tx_time: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based line number in the input, header being line 1.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressList {
    pub records: Vec<AddressRecord>,
    pub row_errors: Vec<RowError>,
}

const REQUIRED_COLUMNS: [&str; 3] = ["address", "tx_count", "last_transaction_time"];

/// Parses an `address,tx_count,last_transaction_time` CSV export.
///
/// Malformed rows land in `row_errors` with their line number; a missing
/// column fails the whole stream.
pub fn ingest_address_list(input: impl Read) -> Result<AddressList> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let mut idx = [0usize; 3];
    for (slot, name) in idx.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Schema(format!("missing required column `{name}`")))?;
    }

    let mut out = AddressList::default();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or_default();
        let field = |i: usize| row.get(idx[i]).unwrap_or("");
        match parse_row(field(0), field(1), field(2)) {
            Ok(rec) => {
                if seen.insert(rec.address.clone()) {
                    out.records.push(rec);
                } else {
                    out.row_errors.push(RowError {
                        line,
                        message: format!("duplicate address {}", rec.address),
                    });
                }
            }
            Err(message) => out.row_errors.push(RowError { line, message }),
        }
    }
    Ok(out)
}

fn parse_row(
    address: &str,
    tx_count: &str,
    time: &str,
) -> std::result::Result<AddressRecord, String> {
    let address = normalize_address(address)?;
    let tx_count: i128 = tx_count
        .parse()
        .map_err(|_| format!("tx_count `{tx_count}` is not an integer"))?;
    if tx_count < 0 {
        return Err(format!("tx_count {tx_count} is negative"));
    }
    let tx_count =
        u64::try_from(tx_count).map_err(|_| format!("tx_count {tx_count} out of range"))?;
    let last_tx_time =
        parse_timestamp(time).ok_or_else(|| format!("unparseable timestamp `{time}`"))?;
    Ok(AddressRecord {
        address,
        tx_count,
        last_tx_time,
    })
}

fn normalize_address(raw: &str) -> std::result::Result<String, String> {
    let lower = raw.to_ascii_lowercase();
    let hex = lower
        .strip_prefix("0x")
        .ok_or_else(|| format!("address `{raw}` lacks 0x prefix"))?;
    if hex.len() != 40 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(format!("address `{raw}` is not 40 hex digits"));
    }
    Ok(lower)
}

/// RFC 3339, plus the `YYYY-MM-DD HH:MM:SS[.fff] UTC` form BigQuery exports.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    let bare = raw.strip_suffix(" UTC").unwrap_or(raw);
    NaiveDateTime::parse_from_str(bare, "%Y-%m-%d %H:%M:%S%.f")
        .ok()
        .map(|n| Utc.from_utc_datetime(&n))
}

/// Keeps records with `tx_count >= min_tx` and `last_tx_time >= cutoff`.
pub fn filter_active(
    records: &[AddressRecord],
    min_tx: u64,
    cutoff: DateTime<Utc>,
) -> Vec<AddressRecord> {
    records
        .iter()
        .filter(|r| r.tx_count >= min_tx && r.last_tx_time >= cutoff)
        .cloned()
        .collect()
}

/// Removes every Unicode whitespace character.
pub fn normalize_for_checksum(text: &str) -> String {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// A retrieved Solidity source blob.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    /// SHA-256 of the raw bytes.
    pub file_id: String,
    pub address: Option<String>,
    pub raw_text: String,
    /// MD5 of the whitespace-stripped text.
    pub normalized_checksum: String,
}

impl SourceFile {
    pub fn new(raw_text: impl Into<String>, address: Option<String>) -> Self {
        let raw_text = raw_text.into();
        SourceFile {
            file_id: sha256_hex(raw_text.as_bytes()),
            address,
            normalized_checksum: md5_hex(normalize_for_checksum(&raw_text).as_bytes()),
            raw_text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    pub normalized_checksum: String,
    pub survivor: String,
    /// Collapsed file ids, survivor excluded, sorted.
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DedupOutcome {
    /// Survivors sorted by file_id.
    pub unique: Vec<SourceFile>,
    /// Only checksums shared by more than one input.
    pub duplicate_groups: Vec<DuplicateGroup>,
}

/// Collapses files sharing a normalized checksum, keeping the smallest
/// file_id of each group. Byte-identical inputs (same file_id) collapse too.
pub fn dedup(files: Vec<SourceFile>) -> DedupOutcome {
    let mut groups: BTreeMap<String, Vec<SourceFile>> = BTreeMap::new();
    for f in files {
        groups
            .entry(f.normalized_checksum.clone())
            .or_default()
            .push(f);
    }
    let mut out = DedupOutcome::default();
    for (checksum, mut members) in groups {
        members.sort_by(|a, b| a.file_id.cmp(&b.file_id));
        let mut rest = members.split_off(1);
        let survivor = members.pop().expect("group is nonempty");
        if !rest.is_empty() {
            out.duplicate_groups.push(DuplicateGroup {
                normalized_checksum: checksum,
                survivor: survivor.file_id.clone(),
                members: rest.drain(..).map(|f| f.file_id).collect(),
            });
        }
        out.unique.push(survivor);
    }
    out.unique.sort_by(|a, b| a.file_id.cmp(&b.file_id));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ADDR: &str = "0xAbCdEf0123456789abcdef0123456789ABCDEF01";

    #[test]
    fn ingest_maps_fields() {
        let csv =
            format!("address,tx_count,last_transaction_time\n{ADDR},42,2024-06-01T00:00:00Z\n");
        let list = ingest_address_list(csv.as_bytes()).unwrap();
        assert!(list.row_errors.is_empty());
        assert_eq!(list.records.len(), 1);
        let r = &list.records[0];
        assert_eq!(r.tx_count, 42);
        assert_eq!(r.address, ADDR.to_ascii_lowercase());
        assert_eq!(
            r.last_tx_time,
            Utc.with_ymd_and_hms(2024, 6, 1, 0, 0, 0).unwrap()
        );
    }

    #[test]
    fn ingest_header_only_is_empty() {
        let list =
            ingest_address_list("address,tx_count,last_transaction_time\n".as_bytes()).unwrap();
        assert_eq!(list, AddressList::default());
    }

    #[test]
    fn ingest_reports_bad_rows_with_line_numbers() {
        let csv = format!(
            "address,tx_count,last_transaction_time\n{ADDR},-1,2024-06-01T00:00:00Z\n{ADDR},3,yesterday\n{ADDR},3,2024-02-02 10:00:00 UTC\n{ADDR},4,2024-02-02T00:00:00Z\n"
        );
        let list = ingest_address_list(csv.as_bytes()).unwrap();
        assert_eq!(list.records.len(), 1);
        assert_eq!(list.records[0].tx_count, 3);
        let lines: Vec<u64> = list.row_errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 3, 5]);
        assert!(list.row_errors[0].message.contains("negative"));
        assert!(list.row_errors[1].message.contains("timestamp"));
        assert!(list.row_errors[2].message.contains("duplicate"));
    }

    #[test]
    fn ingest_missing_column_is_schema_error() {
        let err = ingest_address_list("address,tx_count\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema(m) if m.contains("last_transaction_time")));
    }

    fn rec(tx: u64, y: i32, m: u32, d: u32) -> AddressRecord {
        AddressRecord {
            address: format!("0x{:040x}", tx * 1000 + u64::from(d)),
            tx_count: tx,
            last_tx_time: Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap(),
        }
    }

    #[test]
    fn activity_filter_boundaries() {
        let cutoff = default_cutoff();
        assert!(filter_active(&[rec(9, 2024, 5, 1)], DEFAULT_MIN_TX, cutoff).is_empty());
        assert!(filter_active(&[rec(10, 2023, 12, 31)], DEFAULT_MIN_TX, cutoff).is_empty());
        assert_eq!(
            filter_active(&[rec(10, 2024, 1, 1)], DEFAULT_MIN_TX, cutoff).len(),
            1
        );
        assert!(filter_active(&[], DEFAULT_MIN_TX, cutoff).is_empty());
    }

    #[test]
    fn checksum_normalization() {
        assert_eq!(normalize_for_checksum("a  b\tc\n"), "abc");
        assert_eq!(normalize_for_checksum(""), "");
        assert_eq!(normalize_for_checksum("abc"), "abc");
        assert_eq!(normalize_for_checksum("x\r\n\u{00a0}y"), "xy");
    }

    #[test]
    fn dedup_examples() {
        let a = SourceFile::new("contract A {\n    uint x;\n}\n", None);
        let b = SourceFile::new("contract A {\n\tuint x;\n}", None);
        let c = SourceFile::new("contract A {\n    uint y;\n}\n", None);
        let out = dedup(vec![a.clone(), b.clone(), c.clone(), a.clone()]);
        assert_eq!(out.unique.len(), 2);
        assert_eq!(out.duplicate_groups.len(), 1);
        let group = &out.duplicate_groups[0];
        let smallest = a.file_id.clone().min(b.file_id.clone());
        assert_eq!(group.survivor, smallest);
        assert_eq!(group.members.len(), 2);
        assert!(out.unique.iter().any(|f| f.file_id == c.file_id));
    }
}
