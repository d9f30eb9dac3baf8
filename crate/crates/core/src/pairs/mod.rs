//! Pair generation, scoring, classification into candidate / baseline /
//! supplementary sets, and stripe aggregation.
//!
//! Scoring is data-parallel over the "rows" of the pair triangle (one row per
//! first element of a pair within a block); counters merge associatively so a
//! counting pass never materializes the pairs.

mod stripe;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::embed::{code_similarity_normed, comment_similarity_normed, norm, sq_norm, Embedding};
use crate::error::{Error, Result};
use crate::extractor::{signature_of, FunctionRecord};
use crate::par::Execution;

pub use stripe::{stripe_of, Interval, StripeId, StripeScheme};

pub const DEFAULT_CODE_THRESHOLD: f64 = 0.8;
pub const DEFAULT_COMMENT_THRESHOLD: f64 = 0.8;

/// Unordered pair of function ids, stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairId {
    pub a: String,
    pub b: String,
}

impl PairId {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Self {
        let (x, y) = (x.into(), y.into());
        if x <= y {
            PairId { a: x, b: y }
        } else {
            PairId { a: y, b: x }
        }
    }
}

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.a, self.b)
    }
}

impl FromStr for PairId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('|')
            .ok_or_else(|| Error::InvalidArgument(format!("pair id `{s}` lacks `|`")))?;
        Ok(PairId::new(a, b))
    }
}

impl Serialize for PairId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PairId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingPolicy {
    AllPairs,
    SameName,
    SignatureCompatible,
    SameNameAndSignature,
}

impl FromStr for PairingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-pairs" | "all" => Ok(PairingPolicy::AllPairs),
            "same-name" => Ok(PairingPolicy::SameName),
            "signature-compatible" | "signature" => Ok(PairingPolicy::SignatureCompatible),
            "same-name-and-signature" | "same-name-signature" => {
                Ok(PairingPolicy::SameNameAndSignature)
            }
            other => Err(Error::InvalidArgument(format!(
                "unknown pairing policy `{other}`"
            ))),
        }
    }
}

/// Blocks of function indices; pairs are formed only within a block.
/// Indices in each block are ordered by function_id, so `(i, j)` with `i`
/// before `j` is already canonical.
#[derive(Debug, Clone, Default)]
pub struct PairPlan {
    blocks: Vec<Vec<usize>>,
    /// `(block, position)` of every element that starts at least one pair.
    rows: Vec<(u32, u32)>,
}

impl PairPlan {
    pub fn pair_count(&self) -> u64 {
        self.blocks
            .iter()
            .map(|b| {
                let n = b.len() as u64;
                n * n.saturating_sub(1) / 2
            })
            .sum()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Pairs of row `r`: its element with every later element of the block.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (b, p) = self.rows[r];
        let block = &self.blocks[b as usize];
        let first = block[p as usize];
        block[p as usize + 1..].iter().map(move |&j| (first, j))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows.len()).flat_map(move |r| self.row(r))
    }
}

/// Plans the pairs of `functions` under `policy`. Functions whose signature
/// cannot be parsed never pair under the signature policies.
pub fn generate_pairs(functions: &[FunctionRecord], policy: PairingPolicy) -> PairPlan {
    let signatures: Vec<Option<String>> = match policy {
        PairingPolicy::AllPairs | PairingPolicy::SameName => vec![None; functions.len()],
        _ => functions
            .iter()
            .map(|f| signature_of(f).ok().map(|s| s.to_string()))
            .collect(),
    };
    let mut groups: BTreeMap<(Option<&str>, Option<&str>), Vec<usize>> = BTreeMap::new();
    for (i, f) in functions.iter().enumerate() {
        let key = match policy {
            PairingPolicy::AllPairs => (None, None),
            PairingPolicy::SameName => (Some(f.function_name.as_str()), None),
            PairingPolicy::SignatureCompatible => match &signatures[i] {
                Some(s) => (None, Some(s.as_str())),
                None => continue,
            },
            PairingPolicy::SameNameAndSignature => match &signatures[i] {
                Some(s) => (Some(f.function_name.as_str()), Some(s.as_str())),
                None => continue,
            },
        };
        groups.entry(key).or_default().push(i);
    }
    let mut plan = PairPlan::default();
    for (_, mut block) in groups {
        if block.len() < 2 {
            continue;
        }
        block.sort_by(|&x, &y| functions[x].function_id.cmp(&functions[y].function_id));
        let b = plan.blocks.len() as u32;
        plan.rows
            .extend((0..block.len() as u32 - 1).map(|p| (b, p)));
        plan.blocks.push(block);
    }
    plan
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetLabel {
    Candidate,
    Baseline,
    Supplementary,
    Degenerate,
}

impl SetLabel {
    pub const ALL: [SetLabel; 4] = [
        SetLabel::Candidate,
        SetLabel::Baseline,
        SetLabel::Supplementary,
        SetLabel::Degenerate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SetLabel::Candidate => "candidate",
            SetLabel::Baseline => "baseline",
            SetLabel::Supplementary => "supplementary",
            SetLabel::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for SetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SetLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SetLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown set `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub code: f64,
    pub comment: f64,
    /// When set, `cd_s == code` counts as high code similarity
    /// (supplementary) instead of low.
    #[serde(default)]
    pub code_boundary_high: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            code: DEFAULT_CODE_THRESHOLD,
            comment: DEFAULT_COMMENT_THRESHOLD,
            code_boundary_high: false,
        }
    }
}

impl Thresholds {
    pub fn is_low_code(&self, cd_s: f64) -> bool {
        if self.code_boundary_high {
            cd_s < self.code
        } else {
            cd_s <= self.code
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pair_id: PairId,
    pub cd_s: f64,
    pub cm_s: Option<f64>,
    pub same_name: bool,
    pub signature_compatible: bool,
    /// Some embedding involved was a zero vector.
    pub degenerate: bool,
}

pub fn classify_pair(score: &PairScore, thresholds: &Thresholds) -> SetLabel {
    set_of(score.degenerate, score.cd_s, score.cm_s, thresholds)
}

fn set_of(degenerate: bool, cd_s: f64, cm_s: Option<f64>, thresholds: &Thresholds) -> SetLabel {
    if degenerate {
        SetLabel::Degenerate
    } else if !thresholds.is_low_code(cd_s) {
        SetLabel::Supplementary
    } else if cm_s.is_some_and(|cm| cm > thresholds.comment) {
        SetLabel::Candidate
    } else {
        SetLabel::Baseline
    }
}

/// One line of the pair output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub pair_id: PairId,
    pub cd_s: f64,
    pub cm_s: Option<f64>,
    pub set: SetLabel,
    pub stripe: Option<StripeId>,
    pub same_name: bool,
    pub signature_compatible: bool,
    /// The shared function name of a homonymous pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_name: Option<String>,
}

/// Code and (optional) comment embedding of one function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionEmbeddings {
    pub function_id: String,
    pub code: Embedding,
    pub comment: Option<Embedding>,
}

/// Embeddings, norms and interned names/signatures aligned with a function
/// slice.
pub struct ScoringEngine<'a> {
    functions: &'a [FunctionRecord],
    code: Vec<&'a [f64]>,
    code_norms: Vec<f64>,
    code_degenerate: Vec<bool>,
    comment: Vec<Option<(&'a [f64], f64, bool)>>,
    name_ids: Vec<u32>,
    signature_ids: Vec<Option<u32>>,
    thresholds: Thresholds,
}

/// Numeric part of a pair score.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RawScore {
    cd_s: f64,
    cm_s: Option<f64>,
    degenerate: bool,
    same_name: bool,
    signature_compatible: bool,
}

fn intern<'k>(table: &mut HashMap<&'k str, u32>, key: &'k str) -> u32 {
    let next = table.len() as u32;
    *table.entry(key).or_insert(next)
}

impl<'a> ScoringEngine<'a> {
    /// Fails if any function lacks a code embedding, ids collide, or
    /// embedding dimensions differ.
    pub fn new(
        functions: &'a [FunctionRecord],
        embeddings: &'a [FunctionEmbeddings],
        thresholds: Thresholds,
    ) -> Result<Self> {
        let by_id: HashMap<&str, &FunctionEmbeddings> = embeddings
            .iter()
            .map(|e| (e.function_id.as_str(), e))
            .collect();
        let mut seen = std::collections::HashSet::new();
        let mut code = Vec::with_capacity(functions.len());
        let mut code_norms = Vec::with_capacity(functions.len());
        let mut code_degenerate = Vec::with_capacity(functions.len());
        let mut comment = Vec::with_capacity(functions.len());
        let (mut code_dim, mut comment_dim) = (None, None);
        let check = |slot: &mut Option<usize>, dim: usize| match *slot {
            Some(expected) if expected != dim => Err(Error::DimensionMismatch {
                expected,
                actual: dim,
            }),
            _ => {
                *slot = Some(dim);
                Ok(())
            }
        };
        for f in functions {
            if !seen.insert(f.function_id.as_str()) {
                return Err(Error::Contract(format!(
                    "duplicate function id {}",
                    f.function_id
                )));
            }
            let e = by_id
                .get(f.function_id.as_str())
                .ok_or_else(|| Error::MissingEmbedding(f.function_id.clone()))?;
            check(&mut code_dim, e.code.dim())?;
            code.push(e.code.values.as_slice());
            code_norms.push(norm(&e.code.values));
            code_degenerate.push(e.code.degenerate);
            comment.push(match &e.comment {
                Some(c) => {
                    check(&mut comment_dim, c.dim())?;
                    Some((c.values.as_slice(), sq_norm(&c.values), c.degenerate))
                }
                None => None,
            });
        }
        let mut names = HashMap::new();
        let name_ids = functions
            .iter()
            .map(|f| intern(&mut names, &f.function_name))
            .collect();
        let signatures: Vec<Option<String>> = functions
            .iter()
            .map(|f| signature_of(f).ok().map(|s| s.to_string()))
            .collect();
        let mut sig_table = HashMap::new();
        let signature_ids = signatures
            .iter()
            .map(|s| s.as_deref().map(|s| intern(&mut sig_table, s)))
            .collect();
        Ok(ScoringEngine {
            functions,
            code,
            code_norms,
            code_degenerate,
            comment,
            name_ids,
            signature_ids,
            thresholds,
        })
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    fn raw(&self, i: usize, j: usize) -> RawScore {
        let cd_s = code_similarity_normed(
            self.code[i],
            self.code[j],
            self.code_norms[i],
            self.code_norms[j],
        );
        let mut degenerate = self.code_degenerate[i] || self.code_degenerate[j];
        let cm_s = match (self.comment[i], self.comment[j]) {
            (Some((a, na, da)), Some((b, nb, db))) => {
                if da || db {
                    degenerate = true;
                    None
                } else {
                    comment_similarity_normed(a, b, na, nb)
                }
            }
            _ => None,
        };
        RawScore {
            cd_s,
            cm_s,
            degenerate,
            same_name: self.name_ids[i] == self.name_ids[j],
            signature_compatible: matches!(
                (self.signature_ids[i], self.signature_ids[j]),
                (Some(a), Some(b)) if a == b
            ),
        }
    }

    fn label(&self, r: &RawScore) -> Result<(SetLabel, Option<StripeId>)> {
        let set = set_of(r.degenerate, r.cd_s, r.cm_s, &self.thresholds);
        let stripe = match set {
            SetLabel::Degenerate => None,
            _ => Some(stripe_of(r.cd_s, r.cm_s, set)?),
        };
        Ok((set, stripe))
    }

    pub fn score_pair(&self, i: usize, j: usize) -> Result<PairScore> {
        let r = self.raw(i, j);
        Ok(PairScore {
            pair_id: PairId::new(
                self.functions[i].function_id.as_str(),
                self.functions[j].function_id.as_str(),
            ),
            cd_s: r.cd_s,
            cm_s: r.cm_s,
            same_name: r.same_name,
            signature_compatible: r.signature_compatible,
            degenerate: r.degenerate,
        })
    }

    pub fn classify(&self, i: usize, j: usize) -> Result<ScoredPair> {
        let r = self.raw(i, j);
        let (set, stripe) = self.label(&r)?;
        Ok(ScoredPair {
            pair_id: PairId::new(
                self.functions[i].function_id.as_str(),
                self.functions[j].function_id.as_str(),
            ),
            cd_s: r.cd_s,
            cm_s: r.cm_s,
            set,
            stripe,
            same_name: r.same_name,
            signature_compatible: r.signature_compatible,
            shared_name: r.same_name.then(|| self.functions[i].function_name.clone()),
        })
    }

    /// Scores and classifies every planned pair, sorted by pair id.
    pub fn score_all(&self, plan: &PairPlan, exec: Execution) -> Result<Vec<ScoredPair>> {
        let rows = exec.map_range(plan.row_count(), |r| {
            plan.row(r)
                .map(|(i, j)| self.classify(i, j))
                .collect::<Result<Vec<_>>>()
        });
        let mut out = Vec::with_capacity(plan.pair_count() as usize);
        for row in rows {
            out.extend(row?);
        }
        out.sort_by(|x, y| x.pair_id.cmp(&y.pair_id));
        Ok(out)
    }

    /// Counting pass: stripe populations without storing pairs.
    pub fn count(&self, plan: &PairPlan, exec: Execution) -> Result<StripeCounts> {
        exec.fold_range(
            plan.row_count(),
            || Ok(StripeCounts::default()),
            |acc: Result<StripeCounts>, r| {
                let mut acc = acc?;
                for (i, j) in plan.row(r) {
                    let (set, stripe) = self.label(&self.raw(i, j))?;
                    acc.add_label(set, stripe);
                }
                Ok(acc)
            },
            |a, b| Ok(a?.merge(b?)),
        )
    }
}

/// Per-set stripe populations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripeCounts {
    pub total: u64,
    pub sets: BTreeMap<SetLabel, u64>,
    pub stripes: BTreeMap<StripeId, u64>,
}

impl StripeCounts {
    pub fn add(&mut self, pair: &ScoredPair) {
        self.add_label(pair.set, pair.stripe);
    }

    fn add_label(&mut self, set: SetLabel, stripe: Option<StripeId>) {
        self.total += 1;
        *self.sets.entry(set).or_default() += 1;
        if let Some(s) = stripe {
            *self.stripes.entry(s).or_default() += 1;
        }
    }

    pub fn merge(mut self, other: StripeCounts) -> StripeCounts {
        self.total += other.total;
        for (k, v) in other.sets {
            *self.sets.entry(k).or_default() += v;
        }
        for (k, v) in other.stripes {
            *self.stripes.entry(k).or_default() += v;
        }
        self
    }

    pub fn from_pairs<'p>(pairs: impl IntoIterator<Item = &'p ScoredPair>) -> Self {
        let mut c = StripeCounts::default();
        for p in pairs {
            c.add(p);
        }
        c
    }

    pub fn set_count(&self, set: SetLabel) -> u64 {
        self.sets.get(&set).copied().unwrap_or(0)
    }

    /// Populations of every stripe of `scheme`, zeros included, in order.
    pub fn scheme_populations(&self, scheme: StripeScheme) -> BTreeMap<StripeId, u64> {
        scheme
            .stripes()
            .into_iter()
            .map(|s| (s, self.stripes.get(&s).copied().unwrap_or(0)))
            .collect()
    }
}

/// Candidate counts per shared function name among homonymous candidate
/// pairs, descending, ties broken by name.
pub fn top_cloned_functions<'p>(
    pairs: impl IntoIterator<Item = &'p ScoredPair>,
    k: usize,
) -> Vec<(String, u64)> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for p in pairs {
        if p.set == SetLabel::Candidate && p.same_name {
            if let Some(name) = &p.shared_name {
                *counts.entry(name.as_str()).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, u64)> = counts
        .into_iter()
        .map(|(n, c)| (n.to_string(), c))
        .collect();
    ranked.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    ranked.truncate(k);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::{VersionBucket, Visibility};

    pub(crate) fn func(id: &str, name: &str, code: &str) -> FunctionRecord {
        FunctionRecord {
            function_id: id.into(),
            file_id: "f".into(),
            contract_id: "f:C".into(),
            contract_name: "C".into(),
            solidity_version: VersionBucket::V0_8,
            contract_variables: vec![],
            function_name: name.into(),
            function_visibility: Visibility::Public,
            token_length: 1,
            function_code: code.into(),
            function_comment: None,
            char_length: code.len(),
        }
    }

    fn score(cd_s: f64, cm_s: Option<f64>) -> PairScore {
        PairScore {
            pair_id: PairId::new("a", "b"),
            cd_s,
            cm_s,
            same_name: false,
            signature_compatible: false,
            degenerate: false,
        }
    }

    #[test]
    fn pair_counts_by_policy() {
        let fs: Vec<_> = (0..4)
            .map(|i| func(&format!("f{i}"), "x", "function x() public {}"))
            .collect();
        assert_eq!(generate_pairs(&fs, PairingPolicy::AllPairs).pair_count(), 6);
        assert_eq!(
            generate_pairs(&fs, PairingPolicy::AllPairs).iter().count(),
            6
        );
        let fs = vec![
            func("a", "transfer", "function transfer() public {}"),
            func("b", "transfer", "function transfer(uint x) public {}"),
            func("c", "approve", "function approve() public {}"),
            func("d", "transfer", "function transfer() public {}"),
        ];
        let plan = generate_pairs(&fs, PairingPolicy::SameName);
        assert_eq!(plan.iter().count(), 3);
        assert!(plan
            .iter()
            .all(|(i, j)| fs[i].function_id < fs[j].function_id));
        assert_eq!(
            generate_pairs(&fs, PairingPolicy::SignatureCompatible).pair_count(),
            3
        );
        assert_eq!(
            generate_pairs(&fs, PairingPolicy::SameNameAndSignature).pair_count(),
            1
        );
        assert_eq!(
            generate_pairs(&fs[..1], PairingPolicy::AllPairs).pair_count(),
            0
        );
        assert_eq!(
            generate_pairs(&[], PairingPolicy::AllPairs).iter().count(),
            0
        );
    }

    #[test]
    fn classification_examples() {
        let t = Thresholds::default();
        assert_eq!(
            classify_pair(&score(0.70, Some(0.90)), &t),
            SetLabel::Candidate
        );
        assert_eq!(
            classify_pair(&score(0.85, Some(0.90)), &t),
            SetLabel::Supplementary
        );
        assert_eq!(
            classify_pair(&score(0.50, Some(0.60)), &t),
            SetLabel::Baseline
        );
        assert_eq!(classify_pair(&score(0.50, None), &t), SetLabel::Baseline);
        assert_eq!(
            classify_pair(&score(0.80, Some(0.81)), &t),
            SetLabel::Candidate
        );
        assert_eq!(
            classify_pair(&score(0.50, Some(0.80)), &t),
            SetLabel::Baseline
        );
        let mut d = score(0.5, Some(0.9));
        d.degenerate = true;
        assert_eq!(classify_pair(&d, &t), SetLabel::Degenerate);
        let strict = Thresholds {
            code_boundary_high: true,
            ..t
        };
        assert_eq!(
            classify_pair(&score(0.80, Some(0.9)), &strict),
            SetLabel::Supplementary
        );
    }

    #[test]
    fn top_cloned_ranking() {
        let mk = |name: &str, set| ScoredPair {
            pair_id: PairId::new("a", name),
            cd_s: 0.5,
            cm_s: Some(0.9),
            set,
            stripe: None,
            same_name: true,
            signature_compatible: true,
            shared_name: Some(name.into()),
        };
        let pairs = vec![
            mk("transfer", SetLabel::Candidate),
            mk("approve", SetLabel::Candidate),
            mk("transfer", SetLabel::Candidate),
            mk("transfer", SetLabel::Candidate),
            mk("zzz", SetLabel::Baseline),
        ];
        assert_eq!(
            top_cloned_functions(&pairs, 10),
            vec![("transfer".to_string(), 3), ("approve".to_string(), 1)]
        );
        assert_eq!(top_cloned_functions(&pairs, 1).len(), 1);
        assert!(top_cloned_functions(&[], 5).is_empty());
    }

    #[test]
    fn pair_id_is_canonical() {
        assert_eq!(PairId::new("b", "a"), PairId::new("a", "b"));
        assert_eq!(PairId::new("b", "a").to_string(), "a|b");
        assert_eq!("b|a".parse::<PairId>().unwrap(), PairId::new("a", "b"));
    }
}
