//! LLM-backed documentation: function summaries, the zero-shot clone
//! question, and the hidden-clone scan over uncommented functions.

#[cfg(feature = "http")]
mod http;
mod prompt;
mod provider;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::embed::{comment_similarity, Embedder};
use crate::error::{Error, Result};
use crate::extractor::FunctionRecord;
use crate::fsutil::{read_jsonl, write_jsonl};
use crate::hashing::sha256_hex;
use crate::pairs::{
    generate_pairs, FunctionEmbeddings, PairId, PairingPolicy, ScoredPair, ScoringEngine,
    Thresholds,
};
use crate::par::Execution;

#[cfg(feature = "http")]
pub use http::HttpChatProvider;
pub use prompt::{
    classification_messages, summary_messages, summary_prompt, ChatMessage, PromptStyle,
    CLASSIFY_SYSTEM, STRUCTURED_TEMPLATE, SUMMARY_PROMPT_PREFIX,
};
pub use provider::{
    build_provider, request_key, ChatProvider, Exchange, LlmProviderSpec, ProviderKind,
    RecordingProvider, ReplayProvider, RetryPolicy, StubProvider,
};

pub const DEFAULT_MIN_WORDS: usize = 26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub function_id: String,
    pub style: PromptStyle,
    pub model_id: String,
    pub temperature: f64,
    pub summary_text: String,
    pub created_at: DateTime<Utc>,
    pub cache_key: String,
}

pub fn cache_key(code: &str, style: PromptStyle, model_id: &str) -> String {
    sha256_hex(format!("{code}\0{}\0{model_id}", style.as_str()).as_bytes())
}

/// Summaries keyed by [`cache_key`]; entries are never replaced.
#[derive(Debug, Clone, Default)]
pub struct SummaryCache {
    records: BTreeMap<String, SummaryRecord>,
}

impl SummaryCache {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(SummaryCache::default());
        }
        let mut cache = SummaryCache::default();
        for r in read_jsonl::<SummaryRecord>(path)? {
            cache.records.entry(r.cache_key.clone()).or_insert(r);
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_jsonl(path, self.records.values())
    }

    pub fn get(&self, key: &str) -> Option<&SummaryRecord> {
        self.records.get(key)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &SummaryRecord> {
        self.records.values()
    }
}

type Clock = Box<dyn Fn() -> DateTime<Utc> + Send + Sync>;

/// Summarizes functions through a provider, consulting the cache first.
pub struct Summarizer<'p> {
    provider: &'p dyn ChatProvider,
    retry: RetryPolicy,
    cache: Mutex<SummaryCache>,
    clock: Clock,
    calls: AtomicUsize,
    hits: AtomicUsize,
}

impl<'p> Summarizer<'p> {
    pub fn new(provider: &'p dyn ChatProvider, cache: SummaryCache) -> Self {
        Summarizer {
            provider,
            retry: RetryPolicy::default(),
            cache: Mutex::new(cache),
            clock: Box::new(Utc::now),
            calls: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Fixes `created_at` of new records, for reproducible runs.
    pub fn with_clock(mut self, clock: impl Fn() -> DateTime<Utc> + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    /// Summary requests that missed the cache.
    pub fn provider_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn into_cache(self) -> SummaryCache {
        self.cache.into_inner().expect("cache lock")
    }

    pub fn summarize(
        &self,
        function: &FunctionRecord,
        style: PromptStyle,
    ) -> Result<SummaryRecord> {
        if function.function_code.trim().is_empty() {
            return Err(Error::InvalidArgument(format!(
                "function {} has no code",
                function.function_id
            )));
        }
        let messages = summary_messages(style, &function.function_code)?;
        let model_id = self.provider.model_id().to_string();
        let key = cache_key(&function.function_code, style, &model_id);
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            self.hits.fetch_add(1, Ordering::SeqCst);
            let mut record = hit.clone();
            record.function_id = function.function_id.clone();
            return Ok(record);
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        let text = self.retry.complete(self.provider, &messages)?;
        let text = text.trim().to_string();
        if text.is_empty() {
            return Err(Error::Provider {
                provider: model_id,
                message: "empty summary".into(),
                transient: false,
            });
        }
        let record = SummaryRecord {
            function_id: function.function_id.clone(),
            style,
            model_id,
            temperature: self.provider.temperature(),
            summary_text: text,
            created_at: (self.clock)(),
            cache_key: key.clone(),
        };
        let mut cache = self.cache.lock().expect("cache lock");
        Ok(cache.records.entry(key).or_insert(record).clone())
    }
}

/// Parses a YES/NO answer, ignoring case and surrounding whitespace.
pub fn parse_verdict(text: &str) -> Result<bool> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("yes") {
        Ok(true)
    } else if t.eq_ignore_ascii_case("no") {
        Ok(false)
    } else {
        Err(Error::UnparseableVerdict(text.to_string()))
    }
}

/// Asks the provider whether two functions are semantic clones.
pub fn classify_pair_llm(
    a: &FunctionRecord,
    b: &FunctionRecord,
    provider: &dyn ChatProvider,
    retry: &RetryPolicy,
) -> Result<bool> {
    if a.function_code.trim().is_empty() || b.function_code.trim().is_empty() {
        return Err(Error::InvalidArgument("both functions need code".into()));
    }
    let reply = retry.complete(
        provider,
        &classification_messages(&a.function_code, &b.function_code),
    )?;
    parse_verdict(&reply)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub min_words: usize,
    /// Pairs need `cd_s` strictly below this.
    pub code_threshold: f64,
}

impl Default for GateParams {
    fn default() -> Self {
        GateParams {
            min_words: DEFAULT_MIN_WORDS,
            code_threshold: 0.8,
        }
    }
}

/// Pairs worth an LLM call: homonymous, signature-compatible, low code
/// similarity, and both functions long enough.
pub fn gate_candidates(
    pairs: &[ScoredPair],
    functions: &HashMap<&str, &FunctionRecord>,
    params: &GateParams,
) -> Vec<ScoredPair> {
    let long_enough = |id: &str| {
        functions
            .get(id)
            .is_some_and(|f| f.code_word_count() >= params.min_words)
    };
    pairs
        .iter()
        .filter(|p| {
            p.same_name
                && p.signature_compatible
                && p.cd_s < params.code_threshold
                && long_enough(&p.pair_id.a)
                && long_enough(&p.pair_id.b)
        })
        .cloned()
        .collect()
}

/// Uncommented public/external functions of the `top_n` most active
/// contract addresses. `activity` maps file ids to transaction counts.
pub fn select_scan_population(
    functions: &[FunctionRecord],
    activity: &HashMap<String, u64>,
    top_n: usize,
) -> Vec<FunctionRecord> {
    let mut files: Vec<(&String, &u64)> = activity.iter().collect();
    files.sort_by(|x, y| y.1.cmp(x.1).then_with(|| x.0.cmp(y.0)));
    let chosen: BTreeSet<&str> = files
        .into_iter()
        .take(top_n)
        .map(|(f, _)| f.as_str())
        .collect();
    functions
        .iter()
        .filter(|f| chosen.contains(f.file_id.as_str()))
        .filter(|f| f.is_public_api())
        .filter(|f| {
            f.function_comment
                .as_deref()
                .map_or(true, |c| c.trim().is_empty())
        })
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub gate: GateParams,
    /// Generated-summary similarity must exceed this.
    pub comment_threshold: f64,
    pub style: PromptStyle,
    pub max_in_flight: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            gate: GateParams::default(),
            comment_threshold: 0.8,
            style: PromptStyle::Base,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenClone {
    pub pair_id: PairId,
    pub function_name: String,
    pub cd_s: f64,
    pub cm_s: f64,
    pub summary_a: SummaryRecord,
    pub summary_b: SummaryRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub pair_id: PairId,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub functions: usize,
    pub homonymous_pairs: u64,
    pub eligible_pairs: usize,
    pub provider_calls: usize,
    pub cache_hits: usize,
    pub failures: Vec<PairFailure>,
    pub candidates: Vec<HiddenClone>,
}

/// Summarizes both sides of every gated homonymous pair and keeps those
/// whose summaries are similar. A pair whose summary fails is skipped and
/// reported; the scan goes on.
pub fn hidden_clone_scan(
    functions: &[FunctionRecord],
    code_embedder: &Embedder,
    comment_embedder: &Embedder,
    summarizer: &Summarizer<'_>,
    params: &ScanParams,
    exec: Execution,
) -> Result<ScanReport> {
    let calls_before = summarizer.provider_calls();
    let hits_before = summarizer.cache_hits();
    let plan = generate_pairs(functions, PairingPolicy::SameName);
    let code = code_embedder.embed_code_batch(functions, exec)?;
    let embeddings: Vec<FunctionEmbeddings> = functions
        .iter()
        .zip(code)
        .map(|(f, c)| FunctionEmbeddings {
            function_id: f.function_id.clone(),
            code: c,
            comment: None,
        })
        .collect();
    let engine = ScoringEngine::new(functions, &embeddings, Thresholds::default())?;
    let scored = engine.score_all(&plan, exec)?;
    let by_id: HashMap<&str, &FunctionRecord> = functions
        .iter()
        .map(|f| (f.function_id.as_str(), f))
        .collect();
    let eligible = gate_candidates(&scored, &by_id, &params.gate);

    let needed: Vec<&FunctionRecord> = eligible
        .iter()
        .flat_map(|p| [p.pair_id.a.as_str(), p.pair_id.b.as_str()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|id| by_id[id])
        .collect();
    let summaries = summarize_all(summarizer, &needed, params.style, params.max_in_flight);

    let mut failures = Vec::new();
    let mut candidates = Vec::new();
    for p in &eligible {
        let (sa, sb) = match (
            &summaries[p.pair_id.a.as_str()],
            &summaries[p.pair_id.b.as_str()],
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                log::warn!("skipping pair {}: {e}", p.pair_id);
                failures.push(PairFailure {
                    pair_id: p.pair_id.clone(),
                    error: e.clone(),
                });
                continue;
            }
        };
        let ea = comment_embedder.embed_comment(&sa.summary_text)?;
        let eb = comment_embedder.embed_comment(&sb.summary_text)?;
        if ea.degenerate || eb.degenerate {
            continue;
        }
        let cm_s = comment_similarity(&ea, &eb)?;
        if cm_s > params.comment_threshold {
            candidates.push(HiddenClone {
                pair_id: p.pair_id.clone(),
                function_name: by_id[p.pair_id.a.as_str()].function_name.clone(),
                cd_s: p.cd_s,
                cm_s,
                summary_a: sa.clone(),
                summary_b: sb.clone(),
            });
        }
    }
    candidates.sort_by(|x, y| x.pair_id.cmp(&y.pair_id));
    Ok(ScanReport {
        functions: functions.len(),
        homonymous_pairs: plan.pair_count(),
        eligible_pairs: eligible.len(),
        provider_calls: summarizer.provider_calls() - calls_before,
        cache_hits: summarizer.cache_hits() - hits_before,
        failures,
        candidates,
    })
}

/// Summaries of `functions` with at most `in_flight` concurrent requests.
fn summarize_all<'f>(
    summarizer: &Summarizer<'_>,
    functions: &[&'f FunctionRecord],
    style: PromptStyle,
    in_flight: usize,
) -> HashMap<&'f str, std::result::Result<SummaryRecord, String>> {
    let next = AtomicUsize::new(0);
    let results = Mutex::new(HashMap::with_capacity(functions.len()));
    let workers = in_flight.clamp(1, functions.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(f) = functions.get(i) else { break };
                let r = summarizer.summarize(f, style).map_err(|e| e.to_string());
                results
                    .lock()
                    .expect("results lock")
                    .insert(f.function_id.as_str(), r);
            });
        }
    });
    results.into_inner().expect("results lock")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbedderSpec;
    use crate::extractor::{VersionBucket, Visibility};

    fn func(id: &str, name: &str, body: &str) -> FunctionRecord {
        let code = format!(
            "function {name}(address to, uint256 amount) public returns (bool) {{ {body} }}"
        );
        FunctionRecord {
            function_id: id.into(),
            file_id: format!("file-{id}"),
            contract_id: format!("file-{id}:C"),
            contract_name: "C".into(),
            solidity_version: VersionBucket::V0_8,
            contract_variables: vec![],
            function_name: name.into(),
            function_visibility: Visibility::Public,
            token_length: 0,
            char_length: code.len(),
            function_code: code,
            function_comment: None,
        }
    }

    fn fixed_clock() -> DateTime<Utc> {
        DateTime::parse_from_rfc3339("2025-01-01T00:00:00Z")
            .unwrap()
            .with_timezone(&Utc)
    }

    const LONG_A: &str = "require(to != address(0), \"zero\"); uint256 fromBalance = balances[msg.sender]; require(fromBalance >= amount, \"low\"); balances[msg.sender] = fromBalance - amount; balances[to] += amount; emit Transfer(msg.sender, to, amount); return true;";
    const LONG_B: &str = "_transfer(msg.sender, to, amount); if (amount > 0) { totalMoved = totalMoved + amount; } lastSender = msg.sender; lastReceiver = to; counter += 1; emit Moved(msg.sender, to, amount, counter); return true;";

    #[test]
    fn verdict_parsing() {
        assert!(parse_verdict("YES").unwrap());
        assert!(!parse_verdict(" no\n").unwrap());
        assert!(matches!(
            parse_verdict("Maybe"),
            Err(Error::UnparseableVerdict(_))
        ));
        let stub = StubProvider::new("m").reply("Your response is just YES or NO.", "Yes");
        let (a, b) = (func("a", "t", "x;"), func("b", "t", "y;"));
        assert!(classify_pair_llm(&a, &b, &stub, &RetryPolicy::none()).unwrap());
    }

    #[test]
    fn summaries_are_cached() {
        let stub = StubProvider::new("m");
        let s = Summarizer::new(&stub, SummaryCache::default()).with_clock(fixed_clock);
        let f = func("a", "transfer", "x = 1;");
        let first = s.summarize(&f, PromptStyle::Base).unwrap();
        let second = s.summarize(&f, PromptStyle::Base).unwrap();
        assert_eq!(first, second);
        assert_eq!(stub.calls(), 1);
        s.summarize(&f, PromptStyle::StructuredTemplate).unwrap();
        assert_eq!(stub.calls(), 2);
        assert_eq!(first.temperature, 0.0);
        let empty = StubProvider::new("m").reply("transfer", "   ");
        let s = Summarizer::new(&empty, SummaryCache::default());
        assert!(s.summarize(&f, PromptStyle::Base).is_err());
    }

    #[test]
    fn gating_rules() {
        let long = func("a", "transfer", LONG_A);
        let long2 = func("b", "transfer", LONG_B);
        let short = func("c", "transfer", "return true;");
        let by_id: HashMap<&str, &FunctionRecord> = [
            (&*long.function_id, &long),
            (&*long2.function_id, &long2),
            (&*short.function_id, &short),
        ]
        .into();
        let mk = |a: &str, b: &str, cd_s, same_name| ScoredPair {
            pair_id: PairId::new(a, b),
            cd_s,
            cm_s: None,
            set: crate::pairs::SetLabel::Baseline,
            stripe: None,
            same_name,
            signature_compatible: true,
            shared_name: None,
        };
        let g = GateParams::default();
        assert_eq!(
            gate_candidates(&[mk("a", "b", 0.6, true)], &by_id, &g).len(),
            1
        );
        assert!(gate_candidates(&[mk("a", "b", 0.85, true)], &by_id, &g).is_empty());
        assert!(gate_candidates(&[mk("a", "b", 0.8, true)], &by_id, &g).is_empty());
        assert!(gate_candidates(&[mk("a", "c", 0.6, true)], &by_id, &g).is_empty());
        assert!(gate_candidates(&[mk("a", "b", 0.6, false)], &by_id, &g).is_empty());
    }

    #[test]
    fn scan_skips_failing_pairs_and_respects_budget() {
        let fs = vec![
            func("a", "transfer", LONG_A),
            func("b", "transfer", LONG_B),
            func("c", "approve", LONG_A),
        ];
        let stub = StubProvider::new("m")
            .reply(
                "fromBalance",
                "Moves tokens from the sender to a recipient and returns true.",
            )
            .reply(
                "totalMoved",
                "Moves tokens from the sender to a recipient and returns true.",
            );
        let code = Embedder::new(EmbedderSpec::code_baseline()).unwrap();
        let comment = Embedder::new(EmbedderSpec::comment_baseline()).unwrap();
        let s = Summarizer::new(&stub, SummaryCache::default()).with_clock(fixed_clock);
        let rep = hidden_clone_scan(
            &fs,
            &code,
            &comment,
            &s,
            &ScanParams::default(),
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(rep.homonymous_pairs, 1);
        assert_eq!(rep.eligible_pairs, 1);
        assert_eq!(rep.provider_calls, 2);
        assert_eq!(rep.candidates.len(), 1);
        assert!((rep.candidates[0].cm_s - 1.0).abs() < 1e-12);
        let again = hidden_clone_scan(
            &fs,
            &code,
            &comment,
            &s,
            &ScanParams::default(),
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(again.provider_calls, 0);
        assert_eq!(again.candidates, rep.candidates);

        let broken = StubProvider::new("m").fail("totalMoved", 99, false);
        let s = Summarizer::new(&broken, SummaryCache::default()).with_retry(RetryPolicy::none());
        let rep = hidden_clone_scan(
            &fs,
            &code,
            &comment,
            &s,
            &ScanParams::default(),
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(rep.failures.len(), 1);
        assert!(rep.candidates.is_empty());
    }
}
