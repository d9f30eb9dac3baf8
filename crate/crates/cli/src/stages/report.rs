use std::collections::BTreeMap;

use serde::Serialize;

use soliclone_core::corpus::{CorpusStore, DatasetStats};
use soliclone_core::fsutil::read_jsonl;
use soliclone_core::pairs::{PairingPolicy, ScoredPair, SetLabel};
use soliclone_core::review::{
    agreement_markdown, labels_markdown, metrics_markdown, stripes_markdown, AgreementReport,
    LabelCooccurrence, MetricsReport, StripeReport as JudgedStripes,
};
use soliclone_core::sampling::SamplePlan;

use crate::artifacts::{read_sample, Run};
use crate::error::CliError;
use crate::stages::corpus::{compute_stats, dataset_markdown};
use crate::stages::review::open_store;
use crate::stages::scoring::{stripe_report, StripeReport};
use crate::{Ctx, ReportArgs};

#[derive(Debug, Default, Serialize)]
struct Validation {
    session: String,
    stripes: Vec<JudgedStripes>,
    metrics: Option<MetricsReport>,
    labels: Option<LabelCooccurrence>,
    agreement: Option<AgreementReport>,
}

#[derive(Debug, Serialize)]
struct Report {
    dataset: DatasetStats,
    pairs: Option<StripeReport>,
    samples: BTreeMap<SetLabel, SamplePlan>,
    validation: Option<Validation>,
}

fn warn_none<T, E: std::fmt::Display>(what: &str, r: Result<T, E>) -> Option<T> {
    r.map_err(|e| log::warn!("no {what}: {e}")).ok()
}

fn validation(ctx: &Ctx, a: &ReportArgs, session: &str) -> Result<Validation, CliError> {
    let store = open_store(&ctx.store_dir(&a.store))?;
    Ok(store.with_session(session, |s| Validation {
        session: session.to_string(),
        stripes: warn_none("stripe validation", s.stripe_reports()).unwrap_or_default(),
        metrics: warn_none("metrics", s.metrics()),
        labels: warn_none("label report", s.label_report()),
        agreement: warn_none("agreement", s.agreement()),
    })?)
}

fn populations_markdown(pairs: &StripeReport, samples: &BTreeMap<SetLabel, SamplePlan>) -> String {
    let mut out = String::from("| Set | Stripe | Pairs | Sampled |\n|---|---|---:|---:|\n");
    for (set, stripes) in &pairs.stripes {
        for (stripe, n) in stripes {
            let sampled = samples
                .get(set)
                .and_then(|p| p.allocations.get(stripe))
                .map(|k| k.to_string())
                .unwrap_or_else(|| "–".into());
            out.push_str(&format!("| {set} | {stripe} | {n} | {sampled} |\n"));
        }
    }
    for (set, n) in &pairs.sets {
        out.push_str(&format!("| {set} | total | {n} | |\n"));
    }
    out.push_str(&format!("| all | total | {} | |\n", pairs.total));
    out
}

fn markdown(r: &Report) -> String {
    let mut out = String::from("# Clone detection report\n\n## Dataset\n\n");
    out.push_str(&dataset_markdown(&r.dataset));
    if let Some(p) = &r.pairs {
        out.push_str(&format!("\n## Pair sets ({} functions)\n\n", p.functions));
        out.push_str(&populations_markdown(p, &r.samples));
        if !p.top_cloned_functions.is_empty() {
            out.push_str("\n| Function | Candidate pairs |\n|---|---:|\n");
            for (name, n) in &p.top_cloned_functions {
                out.push_str(&format!("| {name} | {n} |\n"));
            }
        }
    }
    if let Some(v) = &r.validation {
        out.push_str(&format!(
            "\n## Manual validation (session {})\n\n",
            v.session
        ));
        out.push_str(&stripes_markdown(&v.stripes));
        if let Some(m) = &v.metrics {
            out.push('\n');
            out.push_str(&metrics_markdown(m));
        }
        if let Some(l) = &v.labels {
            out.push('\n');
            out.push_str(&labels_markdown(l));
        }
        if let Some(ag) = &v.agreement {
            out.push('\n');
            out.push_str(&agreement_markdown(ag));
        }
    }
    out
}

pub fn report(ctx: &Ctx, a: &ReportArgs) -> Result<(), CliError> {
    let corpus = ctx.corpus_dir(&a.corpus);
    let dataset = compute_stats(ctx, &corpus)?;
    let mut run = Run::new("report", &ctx.config);
    run.input(&corpus.join(CorpusStore::MANIFEST))?;

    let pairs_path = ctx.or_out(&a.pairs, "pairs.jsonl");
    let pairs = if pairs_path.is_file() {
        run.input(&pairs_path)?;
        let scored: Vec<ScoredPair> = read_jsonl(&pairs_path)?;
        let functions = ctx.out("functions.jsonl");
        let count = if functions.is_file() {
            read_jsonl::<serde_json::Value>(&functions)?.len()
        } else {
            0
        };
        let policy: PairingPolicy = ctx.config.pairs.policy;
        Some(stripe_report(policy, count, &scored))
    } else {
        log::warn!("{} not found; pair tables omitted", pairs_path.display());
        None
    };
    let mut samples = BTreeMap::new();
    for set in SetLabel::ALL {
        let path = ctx.out(&format!("sample-{set}.jsonl"));
        if path.is_file() {
            run.input(&path)?;
            samples.insert(set, read_sample(&path)?.plan);
        }
    }
    let validation = match &a.session {
        Some(id) => Some(validation(ctx, a, id)?),
        None => None,
    };
    let report = Report {
        dataset,
        pairs,
        samples,
        validation,
    };
    let dir = ctx.out("reports");
    run.write_json(&dir.join("report.json"), &report)?;
    run.write(&dir.join("report.md"), markdown(&report).as_bytes())?;
    run.finish()?;
    println!("report written to {}", dir.display());
    Ok(())
}
