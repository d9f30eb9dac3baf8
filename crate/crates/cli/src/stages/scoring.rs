use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use soliclone_core::embed::Embedder;
use soliclone_core::extractor::FunctionRecord;
use soliclone_core::fsutil::read_jsonl;
use soliclone_core::pairs::{
    generate_pairs, top_cloned_functions, FunctionEmbeddings, PairingPolicy, ScoredPair,
    ScoringEngine, SetLabel, StripeCounts, StripeId, StripeScheme,
};
use soliclone_core::sampling::stratified_sample;

use crate::artifacts::{file_sha256, read_meta, sample_bytes, Run};
use crate::error::CliError;
use crate::{require, Ctx, EmbedArgs, PairsArgs, SampleArgs};

pub(crate) fn load_functions(path: &Path) -> Result<Vec<FunctionRecord>, CliError> {
    require(path, "extract")?;
    Ok(read_jsonl(path)?)
}

/// Code embeddings for every function; comment embeddings where a comment exists.
pub(crate) fn embed_functions(
    ctx: &Ctx,
    functions: &[FunctionRecord],
) -> Result<Vec<FunctionEmbeddings>, CliError> {
    let code =
        Embedder::new(ctx.config.embed.code.clone())?.embed_code_batch(functions, ctx.exec)?;
    let commented: Vec<usize> = (0..functions.len())
        .filter(|&i| functions[i].function_comment.is_some())
        .collect();
    let texts: Vec<String> = commented
        .iter()
        .map(|&i| functions[i].function_comment.clone().unwrap_or_default())
        .collect();
    let comment_vectors =
        Embedder::new(ctx.config.embed.comment.clone())?.embed_comment_batch(&texts, ctx.exec)?;
    let mut comments: Vec<_> = vec![None; functions.len()];
    for (i, e) in commented.into_iter().zip(comment_vectors) {
        comments[i] = Some(e);
    }
    Ok(functions
        .iter()
        .zip(code)
        .zip(comments)
        .map(|((f, code), comment)| FunctionEmbeddings {
            function_id: f.function_id.clone(),
            code,
            comment,
        })
        .collect())
}

pub fn embed(ctx: &Ctx, a: &EmbedArgs) -> Result<(), CliError> {
    let functions_path = ctx.or_out(&a.functions, "functions.jsonl");
    let functions = load_functions(&functions_path)?;
    let embeddings = embed_functions(ctx, &functions)?;
    let out = ctx.or_out(&a.out, "embeddings.jsonl");
    let mut run = Run::new("embed", &ctx.config);
    run.input(&functions_path)?;
    run.write_jsonl(&out, &embeddings)?;
    run.finish()?;
    println!(
        "{} functions embedded ({} with comments) into {}",
        embeddings.len(),
        embeddings.iter().filter(|e| e.comment.is_some()).count(),
        out.display()
    );
    Ok(())
}

/// Fails unless `embeddings` was produced from the current `functions` file.
fn check_fresh(embeddings: &Path, functions: &Path) -> Result<(), CliError> {
    let Some(meta) = read_meta(embeddings) else {
        log::warn!(
            "{} has no metadata; cannot check it is current",
            embeddings.display()
        );
        return Ok(());
    };
    let name = functions
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    match meta.inputs.get(&name) {
        Some(sha) if *sha == file_sha256(functions)? => Ok(()),
        _ => Err(CliError::Prerequisite(format!(
            "{} is stale for {}: run `embed` first",
            embeddings.display(),
            functions.display()
        ))),
    }
}

/// Pair-set summary written next to the pair file.
#[derive(Debug, Serialize)]
pub(crate) struct StripeReport {
    pub policy: PairingPolicy,
    pub functions: usize,
    pub total: u64,
    pub sets: BTreeMap<SetLabel, u64>,
    pub stripes: BTreeMap<SetLabel, BTreeMap<StripeId, u64>>,
    pub top_cloned_functions: Vec<(String, u64)>,
}

pub(crate) fn stripe_report(
    policy: PairingPolicy,
    functions: usize,
    pairs: &[ScoredPair],
) -> StripeReport {
    let counts = StripeCounts::from_pairs(pairs);
    let stripes = SetLabel::ALL
        .into_iter()
        .filter_map(|s| {
            StripeScheme::for_label(s).map(|scheme| (s, counts.scheme_populations(scheme)))
        })
        .collect();
    StripeReport {
        policy,
        functions,
        total: counts.total,
        sets: SetLabel::ALL
            .into_iter()
            .map(|s| (s, counts.set_count(s)))
            .collect(),
        stripes,
        top_cloned_functions: top_cloned_functions(pairs, 10),
    }
}

pub fn pairs(ctx: &Ctx, a: &PairsArgs) -> Result<(), CliError> {
    let functions_path = ctx.or_out(&a.functions, "functions.jsonl");
    let embeddings_path = ctx.or_out(&a.embeddings, "embeddings.jsonl");
    let functions = load_functions(&functions_path)?;
    require(&embeddings_path, "embed")?;
    check_fresh(&embeddings_path, &functions_path)?;
    let embeddings: Vec<FunctionEmbeddings> = read_jsonl(&embeddings_path)?;

    let policy = ctx.config.pairs.policy;
    let plan = generate_pairs(&functions, policy);
    let engine = ScoringEngine::new(&functions, &embeddings, ctx.config.thresholds()).map_err(
        |e| match e {
            soliclone_core::Error::MissingEmbedding(id) => CliError::Prerequisite(format!(
                "no embedding for {id} in {}: run `embed` first",
                embeddings_path.display()
            )),
            e => e.into(),
        },
    )?;
    let scored = engine.score_all(&plan, ctx.exec)?;
    let report = stripe_report(policy, functions.len(), &scored);

    let out = ctx.or_out(&a.out, "pairs.jsonl");
    let mut run = Run::new("pairs", &ctx.config);
    run.input(&functions_path)?;
    run.input(&embeddings_path)?;
    run.write_jsonl(&out, &scored)?;
    run.write_json(&ctx.or_out(&a.stripe_report, "stripes.json"), &report)?;
    run.finish()?;
    let sets: Vec<String> = report
        .sets
        .iter()
        .map(|(k, v)| format!("{k} {v}"))
        .collect();
    println!(
        "{} pairs scored ({}) into {}",
        report.total,
        sets.join(", "),
        out.display()
    );
    Ok(())
}

pub fn sample(ctx: &Ctx, a: &SampleArgs) -> Result<(), CliError> {
    let pairs_path = ctx.or_out(&a.pairs, "pairs.jsonl");
    require(&pairs_path, "pairs")?;
    let pairs: Vec<ScoredPair> = read_jsonl(&pairs_path)?;
    let set = ctx.config.sample.set;
    let sample = stratified_sample(&pairs, set, &ctx.config.sampling()?)?;
    let out = ctx.or_out(&a.out, &format!("sample-{set}.jsonl"));
    let mut run = Run::new(&format!("sample {set}"), &ctx.config);
    run.input(&pairs_path)?;
    run.write(&out, &sample_bytes(&sample)?)?;
    run.finish()?;
    println!(
        "{} of {} {set} pairs sampled{} into {}",
        sample.pairs.len(),
        sample.plan.populations.values().sum::<u64>(),
        if sample.plan.capped {
            " (whole population)"
        } else {
            ""
        },
        out.display()
    );
    Ok(())
}
