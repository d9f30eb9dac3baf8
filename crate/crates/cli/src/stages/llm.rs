use std::collections::HashMap;
use std::path::PathBuf;

use soliclone_core::embed::Embedder;
use soliclone_core::extractor::FunctionRecord;
use soliclone_core::llmdoc::{
    build_provider, hidden_clone_scan, select_scan_population, GateParams, ScanParams, Summarizer,
    SummaryCache,
};

use crate::artifacts::Run;
use crate::error::CliError;
use crate::stages::corpus::{extract_all, open_corpus};
use crate::stages::scoring::load_functions;
use crate::{now, Ctx, LlmCommand, ScanArgs, SummarizeArgs};

pub fn dispatch(ctx: &Ctx, c: &LlmCommand) -> Result<(), CliError> {
    match c {
        LlmCommand::Summarize(a) => summarize(ctx, a),
        LlmCommand::Scan(a) => scan(ctx, a),
    }
}

fn cache_path(ctx: &Ctx) -> PathBuf {
    ctx.out("llm").join("cache.jsonl")
}

fn summarize(ctx: &Ctx, a: &SummarizeArgs) -> Result<(), CliError> {
    let functions_path = ctx.or_out(&a.functions, "functions.jsonl");
    let functions: Vec<FunctionRecord> = load_functions(&functions_path)?
        .into_iter()
        .filter(|f| !a.only_uncommented || f.function_comment.is_none())
        .collect();
    let spec = &ctx.config.llm.provider;
    let provider = build_provider(spec)?;
    let cache = SummaryCache::load(&cache_path(ctx))?;
    let summarizer = Summarizer::new(provider.as_ref(), cache)
        .with_retry(spec.retry_policy())
        .with_clock(now);
    let mut records = Vec::with_capacity(functions.len());
    let mut failed = 0;
    for f in &functions {
        match summarizer.summarize(f, ctx.config.llm.style) {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("no summary for {}: {e}", f.function_id);
                failed += 1;
            }
        }
    }
    let (calls, hits) = (summarizer.provider_calls(), summarizer.cache_hits());
    summarizer.into_cache().save(&cache_path(ctx))?;

    let out = ctx.or_out(&a.out, "llm/summaries.jsonl");
    let mut run = Run::new("llm summarize", &ctx.config);
    run.input(&functions_path)?;
    run.write_jsonl(&out, &records)?;
    run.finish()?;
    println!(
        "{} summaries ({calls} provider calls, {hits} cached) into {}",
        records.len(),
        out.display()
    );
    if failed > 0 {
        return Err(CliError::Provider(format!(
            "{failed} of {} summaries failed",
            functions.len()
        )));
    }
    Ok(())
}

/// Transaction count per corpus file, from the stored address export.
fn activity(
    ctx: &Ctx,
    a: &ScanArgs,
) -> Result<(Vec<FunctionRecord>, HashMap<String, u64>), CliError> {
    let dir = ctx.corpus_dir(&a.corpus);
    let store = open_corpus(&dir)?;
    let tx: HashMap<String, u64> = store
        .read_addresses()?
        .into_iter()
        .map(|r| (r.address, r.tx_count))
        .collect();
    let activity = store
        .entries()
        .iter()
        .filter_map(|e| {
            let count = tx.get(e.address.as_deref()?)?;
            Some((e.file_id.clone(), *count))
        })
        .collect();
    let functions = match &a.functions {
        Some(path) => load_functions(path)?,
        None => extract_all(ctx, &store.load_files()?),
    };
    Ok((functions, activity))
}

fn scan(ctx: &Ctx, a: &ScanArgs) -> Result<(), CliError> {
    let (functions, activity) = activity(ctx, a)?;
    let llm = &ctx.config.llm;
    let population = select_scan_population(&functions, &activity, llm.top_contracts);
    let provider = build_provider(&llm.provider)?;
    let summarizer = Summarizer::new(provider.as_ref(), SummaryCache::load(&cache_path(ctx))?)
        .with_retry(llm.provider.retry_policy())
        .with_clock(now);
    let params = ScanParams {
        gate: GateParams {
            min_words: llm.min_words,
            code_threshold: llm.code_threshold,
        },
        comment_threshold: llm.threshold,
        style: llm.style,
        max_in_flight: llm.provider.max_in_flight,
    };
    let report = hidden_clone_scan(
        &population,
        &Embedder::new(ctx.config.embed.code.clone())?,
        &Embedder::new(ctx.config.embed.comment.clone())?,
        &summarizer,
        &params,
        ctx.exec,
    )?;
    summarizer.into_cache().save(&cache_path(ctx))?;

    let out = ctx.or_out(&a.out, "llm/scan.json");
    let mut run = Run::new("llm scan", &ctx.config);
    let manifest = ctx
        .corpus_dir(&a.corpus)
        .join(soliclone_core::corpus::CorpusStore::MANIFEST);
    run.input(&manifest)?;
    if let Some(path) = &a.functions {
        run.input(path)?;
    }
    run.write_json(&out, &report)?;
    run.finish()?;
    println!(
        "{} functions scanned: {} homonymous pairs, {} eligible, {} hidden clone candidates ({} provider calls, {} cached)",
        report.functions,
        report.homonymous_pairs,
        report.eligible_pairs,
        report.candidates.len(),
        report.provider_calls,
        report.cache_hits
    );
    if !report.failures.is_empty() {
        return Err(CliError::Provider(format!(
            "{} of {} eligible pairs skipped after provider failures",
            report.failures.len(),
            report.eligible_pairs
        )));
    }
    Ok(())
}
