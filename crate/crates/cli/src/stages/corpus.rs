use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::Serialize;

use soliclone_core::corpus::{
    corpus_stats, filter_active, ingest_address_list, CorpusStore, DatasetStats, DuplicateGroup,
    FsSourceFetcher, RowError, SourceFetcher, SourceFile,
};
use soliclone_core::extractor::{extract_functions, passes_filters, FunctionRecord, Visibility};

use crate::artifacts::Run;
use crate::error::CliError;
use crate::{CorpusArg, Ctx, ExtractArgs, Format, IngestArgs, StatsArgs};

#[derive(Debug, Serialize)]
struct IngestReport {
    rows: usize,
    row_errors: Vec<RowError>,
    active: usize,
    inactive: usize,
    files_fetched: usize,
    files_added: usize,
    missing_sources: Vec<String>,
}

pub fn ingest(ctx: &Ctx, a: &IngestArgs) -> Result<(), CliError> {
    let paths = &ctx.config.paths;
    let addresses = paths
        .addresses
        .as_ref()
        .ok_or_else(|| CliError::Config("ingest needs --addresses (or paths.addresses)".into()))?;
    let sources = paths
        .sources
        .as_ref()
        .ok_or_else(|| CliError::Config("ingest needs --sources (or paths.sources)".into()))?;
    let input = File::open(addresses)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", addresses.display())))?;
    let list = ingest_address_list(input)?;
    for e in &list.row_errors {
        log::warn!("{}:{}: {}", addresses.display(), e.line, e.message);
    }
    let active = filter_active(
        &list.records,
        ctx.config.corpus.min_tx,
        ctx.config.cutoff()?,
    );

    let dir = ctx.corpus_dir(&a.out);
    let mut store = CorpusStore::create(&dir)?;
    let mut run = Run::new("ingest", &ctx.config);
    run.input(addresses)?;
    store.write_addresses(&list.records)?;

    let fetcher = FsSourceFetcher::new(sources);
    let mut report = IngestReport {
        rows: list.records.len() + list.row_errors.len(),
        row_errors: list.row_errors.clone(),
        active: active.len(),
        inactive: list.records.len() - active.len(),
        files_fetched: 0,
        files_added: 0,
        missing_sources: Vec::new(),
    };
    for rec in &active {
        let blobs = fetcher.fetch(&rec.address)?;
        if blobs.is_empty() {
            log::warn!("no source found for {}", rec.address);
            report.missing_sources.push(rec.address.clone());
        }
        for blob in blobs {
            report.files_fetched += 1;
            let file = SourceFile::new(blob.text, Some(rec.address.clone()));
            if store.add(&file, blob.retrieved_at)? {
                report.files_added += 1;
            }
        }
    }
    run.record(&dir.join(CorpusStore::MANIFEST))?;
    run.record(&dir.join(CorpusStore::ADDRESSES))?;
    run.write_json(&ctx.out("ingest-report.json"), &report)?;
    run.finish()?;
    println!(
        "ingested {} active of {} addresses; {} files stored in {}",
        report.active,
        list.records.len(),
        store.entries().len(),
        dir.display()
    );
    Ok(())
}

pub(crate) fn open_corpus(dir: &Path) -> Result<CorpusStore, CliError> {
    if !CorpusStore::exists(dir) {
        return Err(CliError::missing(
            &dir.join(CorpusStore::MANIFEST),
            "ingest",
        ));
    }
    Ok(CorpusStore::open(dir)?)
}

#[derive(Debug, Serialize)]
struct DedupReport {
    before: usize,
    after: usize,
    duplicate_groups: Vec<DuplicateGroup>,
}

pub fn dedup(ctx: &Ctx, a: &CorpusArg) -> Result<(), CliError> {
    let dir = ctx.corpus_dir(&a.corpus);
    let mut store = open_corpus(&dir)?;
    let before = store.entries().len();
    let outcome = store.apply_dedup()?;
    let mut run = Run::new("dedup", &ctx.config);
    run.record(&dir.join(CorpusStore::MANIFEST))?;
    run.record(&dir.join(CorpusStore::DUPLICATES))?;
    let report = DedupReport {
        before,
        after: outcome.unique.len(),
        duplicate_groups: outcome.duplicate_groups,
    };
    run.write_json(&ctx.out("dedup-report.json"), &report)?;
    run.finish()?;
    println!(
        "{} files, {} after deduplication",
        report.before, report.after
    );
    Ok(())
}

/// Every function of every corpus file, in manifest order.
pub(crate) fn extract_all(ctx: &Ctx, files: &[SourceFile]) -> Vec<FunctionRecord> {
    let extractions = ctx.exec.map(files, extract_functions);
    let mut out = Vec::new();
    for (file, ex) in files.iter().zip(extractions) {
        for d in &ex.diagnostics {
            log::debug!("{} @{}: {}", file.file_id, d.offset, d.message);
        }
        out.extend(ex.functions);
    }
    out
}

fn stats_table(s: &DatasetStats) -> String {
    let num = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_else(|| "–".into());
    let int = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_else(|| "–".into());
    let mut out = String::from("| Metric | Value |\n|---|---:|\n");
    for (k, v) in [
        ("Files", s.file_count.to_string()),
        ("Contracts", s.contract_count.to_string()),
        ("Functions", s.function_count.to_string()),
        (
            "Public/external functions",
            s.public_external_count.to_string(),
        ),
        ("Median function length", num(s.function_length.median)),
        ("Longest function", int(s.function_length.longest)),
        ("Shortest function", int(s.function_length.shortest)),
        (
            "Commented functions",
            s.commented_function_count.to_string(),
        ),
        ("Median comment length", num(s.comment_length.median)),
        ("Longest comment", int(s.comment_length.longest)),
        ("Shortest comment", int(s.comment_length.shortest)),
    ] {
        out.push_str(&format!("| {k} | {v} |\n"));
    }
    out
}

pub(crate) fn versions_table(s: &DatasetStats) -> String {
    let mut out = String::from("| Version | Files | % |\n|---|---:|---:|\n");
    for (bucket, share) in &s.version_distribution {
        out.push_str(&format!(
            "| {} | {} | {:.2}% |\n",
            bucket, share.count, share.percentage
        ));
    }
    out
}

pub(crate) fn dataset_markdown(s: &DatasetStats) -> String {
    format!("{}\n{}", stats_table(s), versions_table(s))
}

pub(crate) fn compute_stats(ctx: &Ctx, dir: &Path) -> Result<DatasetStats, CliError> {
    let store = open_corpus(dir)?;
    let files = store.load_files()?;
    let functions = extract_all(ctx, &files);
    Ok(corpus_stats(&files, &functions))
}

pub fn stats(ctx: &Ctx, a: &StatsArgs) -> Result<(), CliError> {
    let dir = ctx.corpus_dir(&a.corpus);
    let stats = compute_stats(ctx, &dir)?;
    let mut run = Run::new("stats", &ctx.config);
    run.input(&dir.join(CorpusStore::MANIFEST))?;
    run.write_json(&ctx.out("stats.json"), &stats)?;
    run.finish()?;
    match a.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&stats).map_err(soliclone_core::Error::from)?
        ),
        Format::Table => print!("{}", dataset_markdown(&stats)),
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ExtractReport {
    files: usize,
    functions: usize,
    kept: usize,
    by_visibility: BTreeMap<Visibility, usize>,
    commented: usize,
}

const CSV_COLUMNS: [&str; 12] = [
    "function_id",
    "file_id",
    "contract_id",
    "contract_name",
    "solidity_version",
    "contract_variables",
    "function_name",
    "function_visibility",
    "token_length",
    "function_code",
    "function_comment",
    "char_length",
];

fn functions_csv(functions: &[FunctionRecord]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Core(e.into());
    w.write_record(CSV_COLUMNS).map_err(fail)?;
    for f in functions {
        let vars =
            serde_json::to_string(&f.contract_variables).map_err(soliclone_core::Error::from)?;
        w.write_record([
            f.function_id.as_str(),
            &f.file_id,
            &f.contract_id,
            &f.contract_name,
            &f.solidity_version.to_string(),
            &vars,
            &f.function_name,
            f.function_visibility.as_str(),
            &f.token_length.to_string(),
            &f.function_code,
            f.function_comment.as_deref().unwrap_or(""),
            &f.char_length.to_string(),
        ])
        .map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Other(e.to_string()))
}

pub fn extract(ctx: &Ctx, a: &ExtractArgs) -> Result<(), CliError> {
    let dir = ctx.corpus_dir(&a.corpus);
    let store = open_corpus(&dir)?;
    let files = store.load_files()?;
    let all = extract_all(ctx, &files);
    let cfg = &ctx.config.extract;
    let kept: Vec<&FunctionRecord> = if cfg.keep_all_visibilities {
        all.iter().collect()
    } else {
        all.iter()
            .filter(|f| passes_filters(f, cfg.min_comment_tokens))
            .collect()
    };
    let mut by_visibility = BTreeMap::new();
    for f in &all {
        *by_visibility.entry(f.function_visibility).or_insert(0) += 1;
    }
    let report = ExtractReport {
        files: files.len(),
        functions: all.len(),
        kept: kept.len(),
        by_visibility,
        commented: all.iter().filter(|f| f.function_comment.is_some()).count(),
    };

    let out = ctx.or_out(&a.out, "functions.jsonl");
    let mut run = Run::new("extract", &ctx.config);
    run.input(&dir.join(CorpusStore::MANIFEST))?;
    run.write_jsonl(&out, &kept)?;
    if let Some(csv_path) = &a.csv {
        let owned: Vec<FunctionRecord> = kept.iter().map(|f| (*f).clone()).collect();
        run.write(csv_path, &functions_csv(&owned)?)?;
    }
    run.write_json(&ctx.out("extract-report.json"), &report)?;
    run.finish()?;
    println!(
        "{} functions extracted from {} files; {} kept in {}",
        report.functions,
        report.files,
        report.kept,
        out.display()
    );
    Ok(())
}
