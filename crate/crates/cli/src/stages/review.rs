use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use soliclone_core::fsutil::read_jsonl;
use soliclone_core::pairs::ScoredPair;
use soliclone_core::review::{Judgment, NewSession, Resolution, ReviewStore};
use soliclone_review_server::AppState;

use crate::artifacts::{read_sample, Run};
use crate::error::CliError;
use crate::stages::scoring::load_functions;
use crate::{now, require, CreateArgs, Ctx, ExportArgs, ImportArgs, ReviewCommand, ServeArgs};

pub fn dispatch(ctx: &Ctx, c: &ReviewCommand) -> Result<(), CliError> {
    match c {
        ReviewCommand::Serve(a) => serve(ctx, a),
        ReviewCommand::Create(a) => create(ctx, a),
        ReviewCommand::Import(a) => import(ctx, a),
        ReviewCommand::Export(a) => export(ctx, a),
    }
}

pub(crate) fn open_store(dir: &Path) -> Result<ReviewStore, CliError> {
    Ok(ReviewStore::open(dir)?.with_clock(|| Some(now())))
}

/// Every `sample-*.jsonl` in the output directory, sorted by name.
fn default_samples(ctx: &Ctx) -> Vec<PathBuf> {
    let Ok(entries) = std::fs::read_dir(&ctx.config.paths.out_dir) else {
        return Vec::new();
    };
    let mut found: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("sample-") && n.ends_with(".jsonl"))
        })
        .collect();
    found.sort();
    found
}

fn create(ctx: &Ctx, a: &CreateArgs) -> Result<(), CliError> {
    let samples = if a.samples.is_empty() {
        default_samples(ctx)
    } else {
        a.samples.clone()
    };
    if samples.is_empty() {
        return Err(CliError::missing(&ctx.out("sample-<set>.jsonl"), "sample"));
    }
    let mut pairs: Vec<ScoredPair> = Vec::new();
    for path in &samples {
        require(path, "sample")?;
        pairs.extend(read_sample(path)?.pairs);
    }
    let referenced: BTreeSet<&str> = pairs
        .iter()
        .flat_map(|p| [p.pair_id.a.as_str(), p.pair_id.b.as_str()])
        .collect();
    let functions_path = ctx.or_out(&a.functions, "functions.jsonl");
    let functions = load_functions(&functions_path)?
        .into_iter()
        .filter(|f| referenced.contains(f.function_id.as_str()))
        .collect();
    let store = open_store(&ctx.store_dir(&a.store))?;
    let id = store.create_session(NewSession {
        name: a.name.clone(),
        mode: a.mode.into(),
        raters: ctx.config.review.raters.clone(),
        seed: ctx.config.seed,
        pairs,
        functions,
    })?;
    let status = store.with_session(&id, |s| s.status())?;
    println!(
        "session {id}: {} pairs, raters {}",
        status.pair_count,
        status.raters.join(", ")
    );
    Ok(())
}

fn import(ctx: &Ctx, a: &ImportArgs) -> Result<(), CliError> {
    let store = open_store(&ctx.store_dir(&a.store))?;
    let (mut stored, mut overwritten, mut resolved) = (0, 0, 0);
    if let Some(path) = &a.judgments {
        for mut j in read_jsonl::<Judgment>(path)? {
            j.session_id = a.session.clone();
            match store.submit(&a.session, j)? {
                soliclone_core::review::Ack::Stored => stored += 1,
                soliclone_core::review::Ack::Overwritten => overwritten += 1,
            }
        }
    }
    if let Some(path) = &a.resolutions {
        for r in read_jsonl::<Resolution>(path)? {
            store.resolve(&a.session, r)?;
            resolved += 1;
        }
    }
    if a.close {
        store.close(&a.session)?;
    }
    println!(
        "session {}: {stored} judgments stored, {overwritten} overwritten, {resolved} resolutions{}",
        a.session,
        if a.close { ", closed" } else { "" }
    );
    Ok(())
}

fn export(ctx: &Ctx, a: &ExportArgs) -> Result<(), CliError> {
    let store = open_store(&ctx.store_dir(&a.store))?;
    let dir = a
        .out
        .clone()
        .unwrap_or_else(|| ctx.out("review-export").join(&a.session));
    let mut run = Run::new(&format!("review export {}", a.session), &ctx.config);
    store.with_session(&a.session, |s| -> Result<(), CliError> {
        run.write_json(&dir.join("status.json"), &s.status())?;
        run.write_jsonl(&dir.join("judgments.jsonl"), s.judgments())?;
        run.write_jsonl(&dir.join("resolutions.jsonl"), s.resolutions())?;
        match s.final_verdicts() {
            Ok(v) => {
                let keyed: BTreeMap<String, _> =
                    v.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
                run.write_json(&dir.join("verdicts.json"), &keyed)?;
            }
            Err(e) => log::warn!("no verdicts: {e}"),
        }
        match s.agreement() {
            Ok(r) => run.write_json(&dir.join("agreement.json"), &r)?,
            Err(e) => log::warn!("no agreement report: {e}"),
        }
        match s.metrics() {
            Ok(m) => run.write_json(&dir.join("metrics.json"), &m)?,
            Err(e) => log::warn!("no metrics: {e}"),
        }
        Ok(())
    })??;
    let written = run.artifacts().len();
    run.finish()?;
    println!("{written} files exported to {}", dir.display());
    Ok(())
}

fn serve(ctx: &Ctx, a: &ServeArgs) -> Result<(), CliError> {
    let cfg = &ctx.config.review;
    let token = match &cfg.token_env {
        Some(var) => Some(
            std::env::var(var)
                .map_err(|_| CliError::Config(format!("environment variable {var} is not set")))?,
        ),
        None => None,
    };
    let ip = a
        .host
        .parse()
        .map_err(|_| CliError::Config(format!("invalid host `{}`", a.host)))?;
    let addr = SocketAddr::new(ip, cfg.port);
    let state = Arc::new(AppState::new(open_store(&ctx.store_dir(&a.store))?).with_token(token));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Other(e.to_string()))?;
    runtime
        .block_on(soliclone_review_server::serve(
            addr,
            state,
            cfg.static_dir.clone(),
        ))
        .map_err(|e| CliError::Other(format!("review service on {addr}: {e}")))
}
