use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use soliclone_core::corpus::{
    corpus_stats, dedup, default_cutoff, filter_active, ingest_address_list, FsSourceFetcher,
    SourceFetcher, SourceFile, DEFAULT_MIN_TX,
};
use soliclone_core::extractor::{
    extract_functions, passes_filters, FunctionRecord, VersionBucket, Visibility,
    DEFAULT_MIN_COMMENT_TOKENS,
};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus")
}

fn addr(tail: &str) -> String {
    format!("0x{}{tail}", "0".repeat(40 - tail.len()))
}

/// Active, deduplicated fixture files.
fn load() -> (Vec<SourceFile>, usize) {
    let csv = fs::read(corpus_dir().join("addresses.csv")).unwrap();
    let list = ingest_address_list(csv.as_slice()).unwrap();
    assert_eq!(list.row_errors.len(), 1, "the malformed timestamp row");
    assert_eq!(list.records.len(), 15);
    let active = filter_active(&list.records, DEFAULT_MIN_TX, default_cutoff());
    let fetcher = FsSourceFetcher::new(corpus_dir().join("sources"));
    let mut files = Vec::new();
    for rec in &active {
        for blob in fetcher.fetch(&rec.address).unwrap() {
            files.push(SourceFile::new(blob.text, Some(rec.address.clone())));
        }
    }
    let fetched = files.len();
    (dedup(files).unique, fetched)
}

/// One hand-counted function, in source order.
#[derive(Debug, serde::Deserialize)]
struct Row {
    address_tail: String,
    contract: String,
    function: String,
    visibility: Visibility,
    commented: bool,
    passes_filters: bool,
}

use Visibility::{
    Default as Dflt, External as Ext, Internal as Int, Private as Priv, Public as Pub,
};

fn golden() -> Vec<Row> {
    let mut r = csv::Reader::from_path(corpus_dir().join("expected_functions.csv")).unwrap();
    r.deserialize().map(|row| row.unwrap()).collect()
}

/// Functions grouped by address, with the whitespace twin of a5 folded onto a5.
fn by_address(files: &[SourceFile]) -> BTreeMap<String, Vec<FunctionRecord>> {
    let mut out: BTreeMap<String, Vec<FunctionRecord>> = BTreeMap::new();
    for f in files {
        let mut a = f.address.clone().unwrap();
        if a == addr("ab") {
            a = addr("a5");
        }
        out.entry(a)
            .or_default()
            .extend(extract_functions(f).functions);
    }
    out
}

#[test]
fn activity_filter_and_dedup_shape_the_corpus() {
    let (files, fetched) = load();
    assert_eq!(fetched, 13);
    assert_eq!(files.len(), 12);
    let addresses: Vec<String> = files.iter().map(|f| f.address.clone().unwrap()).collect();
    for gone in ["ae", "af", "b0"] {
        assert!(!addresses.contains(&addr(gone)));
    }
    // exactly one of the whitespace twins survives
    let twins = addresses
        .iter()
        .filter(|a| **a == addr("a5") || **a == addr("ab"))
        .count();
    assert_eq!(twins, 1);
}

#[test]
fn per_function_golden() {
    let t = Instant::now();
    let (files, _) = load();
    let got = by_address(&files);
    let mut want: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for row in golden() {
        want.entry(addr(&row.address_tail)).or_default().push(row);
    }
    assert_eq!(
        got.keys().collect::<Vec<_>>(),
        want.keys().collect::<Vec<_>>()
    );
    for (a, rows) in &want {
        let fs = &got[a];
        let names: Vec<&str> = fs.iter().map(|f| f.function_name.as_str()).collect();
        let want_names: Vec<&str> = rows.iter().map(|r| r.function.as_str()).collect();
        assert_eq!(names, want_names, "{a}");
        for (f, r) in fs.iter().zip(rows) {
            let ctx = format!("{a} {}", r.function);
            assert_eq!(f.contract_name, r.contract, "{ctx}");
            assert_eq!(f.function_visibility, r.visibility, "{ctx}");
            assert_eq!(f.function_comment.is_some(), r.commented, "{ctx}");
            assert_eq!(
                passes_filters(f, DEFAULT_MIN_COMMENT_TOKENS),
                r.passes_filters,
                "{ctx}"
            );
        }
    }
    assert!(t.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn aggregate_counts() {
    let (files, _) = load();
    let functions: Vec<FunctionRecord> = files
        .iter()
        .flat_map(|f| extract_functions(f).functions)
        .collect();
    assert_eq!(functions.len(), 48);

    let mut vis: BTreeMap<Visibility, usize> = BTreeMap::new();
    for f in &functions {
        *vis.entry(f.function_visibility).or_default() += 1;
    }
    let vis: Vec<(Visibility, usize)> = vis.into_iter().collect();
    assert_eq!(vis, [(Pub, 16), (Ext, 14), (Int, 13), (Priv, 1), (Dflt, 4)]);

    let stats = corpus_stats(&files, &functions);
    assert_eq!(stats.file_count, 12);
    assert_eq!(stats.contract_count, 15);
    assert_eq!(stats.public_external_count, 33);
    assert_eq!(stats.commented_function_count, 30);
    assert_eq!(
        functions
            .iter()
            .filter(|f| passes_filters(f, DEFAULT_MIN_COMMENT_TOKENS))
            .count(),
        22
    );

    let versions: Vec<(VersionBucket, usize)> = stats
        .version_distribution
        .iter()
        .map(|(b, s)| (*b, s.count))
        .collect();
    assert_eq!(
        versions,
        [
            (VersionBucket::V0_4, 1),
            (VersionBucket::V0_5, 1),
            (VersionBucket::V0_6, 2),
            (VersionBucket::V0_7, 2),
            (VersionBucket::V0_8, 5),
            (VersionBucket::NoVersion, 1),
        ]
    );
}

#[test]
fn comment_attribution_details() {
    let (files, _) = load();
    let got = by_address(&files);
    let comment = |tail: &str, name: &str| {
        got[&addr(tail)]
            .iter()
            .find(|f| f.function_name == name)
            .unwrap()
            .function_comment
            .clone()
    };
    // consecutive `///` lines join; the blank-line gap and the plain or banner comments attach nothing
    assert_eq!(
        comment("a5", "transfer").as_deref(),
        Some(
            "@notice Sends `_amount` wei from the caller's balance to `_to`. \
             @dev Reverts when the balance is too low or the call fails."
        )
    );
    assert_eq!(
        comment("a6", "transfer").as_deref(),
        Some("@notice Sends `_amount` wei from the caller's balance to `_to`.")
    );
    assert_eq!(comment("a9", "stake"), None);
    assert_eq!(comment("a9", "unstake"), None);
    assert_eq!(comment("a9", "stakeOf"), None);
    assert_eq!(
        comment("a3", "transferOwnership"),
        comment("a4", "transferOwnership"),
        "copy-pasted documentation over different behaviour"
    );
    // the interface-level block comment belongs to no function
    assert_eq!(
        comment("a7", "totalSupply").as_deref(),
        Some("@dev Returns the amount of tokens in existence.")
    );
    // inline body comments are stripped from the normalized code
    let stake = got[&addr("a9")]
        .iter()
        .find(|f| f.function_name == "stake")
        .unwrap();
    assert!(!stake.function_code.contains("running total"));
    assert!(!stake.function_code.contains("global counter"));
}
