use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::SourceFile;
use crate::extractor::{detect_version, FunctionRecord, VersionBucket};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub median: Option<f64>,
    pub longest: Option<usize>,
    pub shortest: Option<usize>,
}

impl LengthStats {
    pub fn from_lengths(mut lengths: Vec<usize>) -> Self {
        if lengths.is_empty() {
            return LengthStats::default();
        }
        lengths.sort_unstable();
        let n = lengths.len();
        let median = if n % 2 == 1 {
            lengths[n / 2] as f64
        } else {
            (lengths[n / 2 - 1] + lengths[n / 2]) as f64 / 2.0
        };
        LengthStats {
            median: Some(median),
            longest: lengths.last().copied(),
            shortest: lengths.first().copied(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionShare {
    pub count: usize,
    pub percentage: f64,
}

/// Corpus-level counts and length statistics (character lengths).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub file_count: usize,
    pub contract_count: usize,
    pub function_count: usize,
    pub public_external_count: usize,
    pub function_length: LengthStats,
    pub commented_function_count: usize,
    /// Over comments of at least two words.
    pub comment_length: LengthStats,
    pub version_distribution: BTreeMap<VersionBucket, VersionShare>,
}

/// Contracts are counted as distinct `contract_id`s among the functions
/// (file-level free functions excluded); versions are counted per file.
pub fn corpus_stats(files: &[SourceFile], functions: &[FunctionRecord]) -> DatasetStats {
    let contracts: BTreeSet<&str> = functions
        .iter()
        .filter(|f| !f.contract_name.is_empty())
        .map(|f| f.contract_id.as_str())
        .collect();
    let comment_lengths = functions
        .iter()
        .filter_map(|f| f.function_comment.as_deref())
        .filter(|c| c.split_whitespace().count() >= 2)
        .map(|c| c.chars().count())
        .collect();

    let mut counts: BTreeMap<VersionBucket, usize> = BTreeMap::new();
    for f in files {
        *counts.entry(detect_version(&f.raw_text)).or_default() += 1;
    }
    let total = files.len();
    let version_distribution = counts
        .into_iter()
        .map(|(bucket, count)| {
            (
                bucket,
                VersionShare {
                    count,
                    percentage: 100.0 * count as f64 / total as f64,
                },
            )
        })
        .collect();

    DatasetStats {
        file_count: total,
        contract_count: contracts.len(),
        function_count: functions.len(),
        public_external_count: functions.iter().filter(|f| f.is_public_api()).count(),
        function_length: LengthStats::from_lengths(
            functions.iter().map(|f| f.char_length).collect(),
        ),
        commented_function_count: functions
            .iter()
            .filter(|f| f.function_comment.is_some())
            .count(),
        comment_length: LengthStats::from_lengths(comment_lengths),
        version_distribution,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::extract_functions;

    #[test]
    fn empty_corpus() {
        let s = corpus_stats(&[], &[]);
        assert_eq!(s.function_count, 0);
        assert_eq!(s.function_length, LengthStats::default());
        assert!(s.version_distribution.is_empty());
    }

    #[test]
    fn single_length() {
        let s = LengthStats::from_lengths(vec![100]);
        assert_eq!(
            (s.median, s.longest, s.shortest),
            (Some(100.0), Some(100), Some(100))
        );
        let s = LengthStats::from_lengths(vec![4, 1, 3, 10]);
        assert_eq!(
            (s.median, s.longest, s.shortest),
            (Some(3.5), Some(10), Some(1))
        );
    }

    #[test]
    fn counts_small_corpus() {
        let files = vec![
            SourceFile::new(
                "pragma solidity ^0.8.0;\ncontract A {\n/// one word\nfunction a() public {}\n/// x\nfunction b() internal {}\n}",
                None,
            ),
            SourceFile::new("contract B { function c() external {} }", None),
        ];
        let functions: Vec<_> = files
            .iter()
            .flat_map(|f| extract_functions(f).functions)
            .collect();
        let s = corpus_stats(&files, &functions);
        assert_eq!(s.file_count, 2);
        assert_eq!(s.contract_count, 2);
        assert_eq!(s.function_count, 3);
        assert_eq!(s.public_external_count, 2);
        assert_eq!(s.commented_function_count, 2);
        // only "one word" has two words
        assert_eq!(s.comment_length.longest, Some(8));
        assert_eq!(s.version_distribution[&VersionBucket::V0_8].count, 1);
        assert_eq!(
            s.version_distribution[&VersionBucket::NoVersion].percentage,
            50.0
        );
    }
}
