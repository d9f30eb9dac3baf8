//! Human validation sessions: verdicts, characterization labels, agreement,
//! conflict resolution and the summary tables derived from final verdicts.

mod agreement;
mod metrics;
mod render;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::extractor::FunctionRecord;
use crate::hashing::fnv1a64;
use crate::pairs::{PairId, ScoredPair, SetLabel};

pub use agreement::{cohen_kappa, kappa_from_counts, AgreementReport, AgreementTable};
pub use metrics::{
    confusion_metrics, label_cooccurrence, stripe_report, ConfusionMatrix, LabelCooccurrence,
    LabelCount, MetricsReport, StripeReport, StripeRow,
};
pub use render::{agreement_markdown, labels_markdown, metrics_markdown, stripes_markdown};
pub use store::ReviewStore;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReviewError {
    #[error("session `{0}` already exists")]
    DuplicateSession(String),
    #[error("invalid session name `{0}`: use letters, digits, `-` and `_`")]
    InvalidSessionName(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("the sample is empty")]
    EmptySample,
    #[error("pair {0} appears twice in the sample")]
    DuplicatePair(String),
    #[error("a session needs at least one rater")]
    NoRaters,
    #[error("pair {0} is not part of the session")]
    UnknownPair(String),
    #[error("rater `{0}` is not assigned to the session")]
    UnknownRater(String),
    #[error("labels are only allowed with a Type-4 clone verdict")]
    LabelsWithoutClone,
    #[error("session `{0}` is closed")]
    SessionClosed(String),
    #[error("pair {0} is not in conflict")]
    NotInConflict(String),
    #[error("agreement needs exactly two raters, the session has {0}")]
    NeedTwoRaters(usize),
    #[error("agreement needs at least 2 jointly judged pairs, found {0}")]
    TooFewCommonPairs(usize),
    #[error("kappa is undefined: expected agreement is 1 but observed agreement is {0}")]
    UndefinedKappa(f64),
    #[error("{0} conflict(s) are unresolved")]
    UnresolvedConflicts(usize),
    #[error("{0} pair(s) lack a verdict from every rater")]
    IncompleteJudging(usize),
    #[error("the candidate set is empty")]
    EmptyCandidateSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    #[serde(rename = "type4_clone")]
    Type4Clone,
    #[serde(rename = "type3_clone")]
    Type3Clone,
    NonClone,
}

impl Verdict {
    /// Collapse used for agreement and confusion counts.
    pub fn is_clone(self) -> bool {
        self == Verdict::Type4Clone
    }
}

/// Characterization labels for confirmed clones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Modifier,
    #[serde(rename = "safemath")]
    SafeMath,
    CallSuper,
    CallInternal,
    DiffAlgo,
    SpecImpl,
    AddCheck,
}

impl Label {
    pub const ALL: [Label; 7] = [
        Label::Modifier,
        Label::SafeMath,
        Label::CallSuper,
        Label::CallInternal,
        Label::DiffAlgo,
        Label::SpecImpl,
        Label::AddCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Modifier => "modifier",
            Label::SafeMath => "safemath",
            Label::CallSuper => "call_super",
            Label::CallInternal => "call_internal",
            Label::DiffAlgo => "diff_algo",
            Label::SpecImpl => "spec_impl",
            Label::AddCheck => "add_check",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| crate::Error::InvalidArgument(format!("unknown label `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionMode {
    Pilot,
    Full,
}

/// Request body for creating a session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewSession {
    pub name: String,
    pub mode: SessionMode,
    pub raters: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    pub pairs: Vec<ScoredPair>,
    /// Functions referenced by the pairs, shown to raters.
    #[serde(default)]
    pub functions: Vec<FunctionRecord>,
}

/// A rater's verdict as submitted; the service stamps missing timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    #[serde(default)]
    pub session_id: String,
    pub pair_id: PairId,
    pub rater_id: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub labels: BTreeSet<Label>,
    #[serde(default)]
    pub note: String,
    /// Whether the header comments describe the code coherently.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherent: Option<bool>,
    /// Whether the header comments are complete.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complete: Option<bool>,
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub pair_id: PairId,
    pub verdict: Verdict,
    #[serde(default)]
    pub labels: BTreeSet<Label>,
    #[serde(default)]
    pub note: String,
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub timestamp: Option<DateTime<Utc>>,
    pub action: String,
    pub pair_id: PairId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rater_id: Option<String>,
    pub previous: Verdict,
    pub replacement: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ack {
    Stored,
    Overwritten,
}

/// Log record; a session is the replay of its events.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        session: NewSession,
        timestamp: Option<DateTime<Utc>>,
    },
    Judged {
        judgment: Judgment,
    },
    Resolved {
        resolution: Resolution,
    },
    Closed {
        timestamp: Option<DateTime<Utc>>,
    },
}

/// Per-pair outcome after agreement and resolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalVerdict {
    pub verdict: Verdict,
    pub labels: BTreeSet<Label>,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub expected_judgments: usize,
    pub submitted_judgments: usize,
    pub per_rater: BTreeMap<String, usize>,
    pub raw_conflicts: usize,
    pub unresolved_conflicts: usize,
    pub closed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionStatus {
    pub id: String,
    pub mode: SessionMode,
    pub raters: Vec<String>,
    pub pair_count: usize,
    pub created_at: Option<DateTime<Utc>>,
    pub progress: Progress,
}

/// The next pair a rater should judge, with both functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NextPair {
    pub session_id: String,
    pub rater_id: String,
    pub position: usize,
    pub total: usize,
    pub pair: ScoredPair,
    pub function_a: Option<FunctionRecord>,
    pub function_b: Option<FunctionRecord>,
}

/// One conflicted pair with every rater's verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Conflict {
    pub pair_id: PairId,
    pub judgments: Vec<Judgment>,
    pub resolution: Option<Resolution>,
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    mode: SessionMode,
    raters: Vec<String>,
    created_at: Option<DateTime<Utc>>,
    pairs: BTreeMap<PairId, ScoredPair>,
    functions: BTreeMap<String, FunctionRecord>,
    orders: BTreeMap<String, Vec<PairId>>,
    judgments: BTreeMap<(PairId, String), Judgment>,
    resolutions: BTreeMap<PairId, Resolution>,
    audit: Vec<AuditEntry>,
    closed: bool,
}

pub(crate) fn valid_session_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 128
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Session {
    pub fn create(spec: NewSession, now: Option<DateTime<Utc>>) -> Result<Session, ReviewError> {
        if !valid_session_name(&spec.name) {
            return Err(ReviewError::InvalidSessionName(spec.name));
        }
        if spec.pairs.is_empty() {
            return Err(ReviewError::EmptySample);
        }
        let mut raters: Vec<String> = Vec::new();
        for r in &spec.raters {
            if !raters.contains(r) {
                raters.push(r.clone());
            }
        }
        if raters.is_empty() {
            return Err(ReviewError::NoRaters);
        }
        let mut pairs = BTreeMap::new();
        for p in &spec.pairs {
            if pairs.insert(p.pair_id.clone(), p.clone()).is_some() {
                return Err(ReviewError::DuplicatePair(p.pair_id.to_string()));
            }
        }
        let referenced: BTreeSet<&str> = pairs
            .keys()
            .flat_map(|id| [id.a.as_str(), id.b.as_str()])
            .collect();
        let functions = spec
            .functions
            .iter()
            .filter(|f| referenced.contains(f.function_id.as_str()))
            .map(|f| (f.function_id.clone(), f.clone()))
            .collect();
        let ids: Vec<PairId> = pairs.keys().cloned().collect();
        let orders = raters
            .iter()
            .map(|r| {
                let mut order = ids.clone();
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ fnv1a64(r.as_bytes()));
                order.shuffle(&mut rng);
                (r.clone(), order)
            })
            .collect();
        Ok(Session {
            id: spec.name,
            mode: spec.mode,
            raters,
            created_at: now,
            pairs,
            functions,
            orders,
            judgments: BTreeMap::new(),
            resolutions: BTreeMap::new(),
            audit: Vec::new(),
            closed: false,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mode(&self) -> SessionMode {
        self.mode
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn pairs(&self) -> impl Iterator<Item = &ScoredPair> {
        self.pairs.values()
    }

    pub fn pair(&self, id: &PairId) -> Option<&ScoredPair> {
        self.pairs.get(id)
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn judgments(&self) -> impl Iterator<Item = &Judgment> {
        self.judgments.values()
    }

    pub fn judgment(&self, pair: &PairId, rater: &str) -> Option<&Judgment> {
        self.judgments.get(&(pair.clone(), rater.to_string()))
    }

    pub fn resolutions(&self) -> impl Iterator<Item = &Resolution> {
        self.resolutions.values()
    }

    /// Presentation order for `rater`.
    pub fn order(&self, rater: &str) -> Result<&[PairId], ReviewError> {
        self.orders
            .get(rater)
            .map(Vec::as_slice)
            .ok_or_else(|| ReviewError::UnknownRater(rater.to_string()))
    }

    pub fn validate_judgment(&self, j: &Judgment) -> Result<(), ReviewError> {
        if self.closed {
            return Err(ReviewError::SessionClosed(self.id.clone()));
        }
        if !self.pairs.contains_key(&j.pair_id) {
            return Err(ReviewError::UnknownPair(j.pair_id.to_string()));
        }
        if !self.orders.contains_key(&j.rater_id) {
            return Err(ReviewError::UnknownRater(j.rater_id.clone()));
        }
        if !j.labels.is_empty() && j.verdict != Verdict::Type4Clone {
            return Err(ReviewError::LabelsWithoutClone);
        }
        Ok(())
    }

    /// Records a judgment; a resubmission replaces the earlier one and
    /// leaves an audit entry.
    pub fn submit(&mut self, mut j: Judgment) -> Result<Ack, ReviewError> {
        self.validate_judgment(&j)?;
        j.session_id = self.id.clone();
        let key = (j.pair_id.clone(), j.rater_id.clone());
        let ack = match self.judgments.get(&key) {
            Some(prev) => {
                self.audit.push(AuditEntry {
                    timestamp: j.timestamp,
                    action: "judgment_overwritten".into(),
                    pair_id: j.pair_id.clone(),
                    rater_id: Some(j.rater_id.clone()),
                    previous: prev.verdict,
                    replacement: j.verdict,
                });
                Ack::Overwritten
            }
            None => Ack::Stored,
        };
        self.judgments.insert(key, j);
        Ok(ack)
    }

    pub fn validate_resolution(&self, r: &Resolution) -> Result<(), ReviewError> {
        if !self.pairs.contains_key(&r.pair_id) {
            return Err(ReviewError::UnknownPair(r.pair_id.to_string()));
        }
        if !r.labels.is_empty() && r.verdict != Verdict::Type4Clone {
            return Err(ReviewError::LabelsWithoutClone);
        }
        if !self.raw_conflicts().contains(&r.pair_id) {
            return Err(ReviewError::NotInConflict(r.pair_id.to_string()));
        }
        Ok(())
    }

    pub fn resolve(&mut self, r: Resolution) -> Result<Ack, ReviewError> {
        self.validate_resolution(&r)?;
        let ack = match self.resolutions.get(&r.pair_id) {
            Some(prev) => {
                self.audit.push(AuditEntry {
                    timestamp: r.timestamp,
                    action: "resolution_overwritten".into(),
                    pair_id: r.pair_id.clone(),
                    rater_id: None,
                    previous: prev.verdict,
                    replacement: r.verdict,
                });
                Ack::Overwritten
            }
            None => Ack::Stored,
        };
        self.resolutions.insert(r.pair_id.clone(), r);
        Ok(ack)
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    /// Replays one logged event.
    pub fn apply(&mut self, event: Event) -> Result<(), ReviewError> {
        match event {
            Event::Created { .. } => Ok(()),
            Event::Judged { judgment } => self.submit(judgment).map(|_| ()),
            Event::Resolved { resolution } => self.resolve(resolution).map(|_| ()),
            Event::Closed { .. } => {
                self.close();
                Ok(())
            }
        }
    }

    pub fn next(&self, rater: &str) -> Result<Option<NextPair>, ReviewError> {
        let order = self.order(rater)?;
        let done = order
            .iter()
            .filter(|id| {
                self.judgments
                    .contains_key(&((*id).clone(), rater.to_string()))
            })
            .count();
        let next = order.iter().find(|id| {
            !self
                .judgments
                .contains_key(&((*id).clone(), rater.to_string()))
        });
        Ok(next.map(|id| NextPair {
            session_id: self.id.clone(),
            rater_id: rater.to_string(),
            position: done,
            total: order.len(),
            pair: self.pairs[id].clone(),
            function_a: self.functions.get(&id.a).cloned(),
            function_b: self.functions.get(&id.b).cloned(),
        }))
    }

    /// Pairs every rater judged whose collapsed verdicts differ, resolved
    /// or not.
    pub fn raw_conflicts(&self) -> Vec<PairId> {
        self.pairs
            .keys()
            .filter(|id| {
                let verdicts: Vec<bool> = self
                    .raters
                    .iter()
                    .filter_map(|r| self.judgment(id, r).map(|j| j.verdict.is_clone()))
                    .collect();
                verdicts.len() == self.raters.len() && verdicts.iter().any(|&v| v != verdicts[0])
            })
            .cloned()
            .collect()
    }

    /// Conflicts still awaiting a resolution.
    pub fn conflicts(&self) -> Vec<Conflict> {
        self.raw_conflicts()
            .into_iter()
            .filter(|id| !self.resolutions.contains_key(id))
            .map(|id| self.conflict_view(id))
            .collect()
    }

    fn conflict_view(&self, id: PairId) -> Conflict {
        Conflict {
            judgments: self
                .raters
                .iter()
                .filter_map(|r| self.judgment(&id, r).cloned())
                .collect(),
            resolution: self.resolutions.get(&id).cloned(),
            pair_id: id,
        }
    }

    pub fn progress(&self) -> Progress {
        let per_rater = self
            .raters
            .iter()
            .map(|r| {
                let n = self
                    .pairs
                    .keys()
                    .filter(|id| self.judgment(id, r).is_some())
                    .count();
                (r.clone(), n)
            })
            .collect();
        let raw = self.raw_conflicts();
        let unresolved = raw
            .iter()
            .filter(|id| !self.resolutions.contains_key(id))
            .count();
        Progress {
            expected_judgments: self.pairs.len() * self.raters.len(),
            submitted_judgments: self.judgments.len(),
            per_rater,
            raw_conflicts: raw.len(),
            unresolved_conflicts: unresolved,
            closed: self.closed,
        }
    }

    pub fn status(&self) -> SessionStatus {
        SessionStatus {
            id: self.id.clone(),
            mode: self.mode,
            raters: self.raters.clone(),
            pair_count: self.pairs.len(),
            created_at: self.created_at,
            progress: self.progress(),
        }
    }

    pub fn agreement(&self) -> Result<AgreementReport, ReviewError> {
        cohen_kappa(self)
    }

    /// Final verdict of every pair: the resolution if one exists, otherwise
    /// the raters' common verdict. When raters agree on the collapse but not
    /// the exact verdict, a Type-3 verdict outranks a non-clone; agreeing
    /// Type-4 verdicts keep the union of their labels.
    pub fn final_verdicts(&self) -> Result<BTreeMap<PairId, FinalVerdict>, ReviewError> {
        let incomplete = self
            .pairs
            .keys()
            .filter(|id| !self.resolutions.contains_key(*id))
            .filter(|id| self.raters.iter().any(|r| self.judgment(id, r).is_none()))
            .count();
        if incomplete > 0 {
            return Err(ReviewError::IncompleteJudging(incomplete));
        }
        let unresolved = self.conflicts().len();
        if unresolved > 0 {
            return Err(ReviewError::UnresolvedConflicts(unresolved));
        }
        let mut out = BTreeMap::new();
        for id in self.pairs.keys() {
            let fv = match self.resolutions.get(id) {
                Some(r) => FinalVerdict {
                    verdict: r.verdict,
                    labels: r.labels.clone(),
                    resolved: true,
                },
                None => {
                    let js: Vec<&Judgment> = self
                        .raters
                        .iter()
                        .filter_map(|r| self.judgment(id, r))
                        .collect();
                    let verdict = js
                        .iter()
                        .map(|j| j.verdict)
                        .min()
                        .expect("every rater judged");
                    let labels = js.iter().flat_map(|j| j.labels.iter().copied()).collect();
                    FinalVerdict {
                        verdict,
                        labels,
                        resolved: false,
                    }
                }
            };
            out.insert(id.clone(), fv);
        }
        Ok(out)
    }

    pub fn metrics(&self) -> crate::Result<MetricsReport> {
        let finals = self.final_verdicts()?;
        let by_set = |set: SetLabel| -> Vec<(&ScoredPair, Verdict)> {
            self.pairs
                .values()
                .filter(|p| p.set == set)
                .map(|p| (p, finals[&p.pair_id].verdict))
                .collect()
        };
        Ok(confusion_metrics(
            &by_set(SetLabel::Candidate),
            &by_set(SetLabel::Baseline),
            &by_set(SetLabel::Supplementary),
        )?)
    }

    pub fn stripe_reports(&self) -> Result<Vec<StripeReport>, ReviewError> {
        let finals = self.final_verdicts()?;
        Ok([
            SetLabel::Candidate,
            SetLabel::Baseline,
            SetLabel::Supplementary,
        ]
        .into_iter()
        .filter_map(|set| {
            let judged: Vec<(&ScoredPair, Verdict)> = self
                .pairs
                .values()
                .filter(|p| p.set == set)
                .map(|p| (p, finals[&p.pair_id].verdict))
                .collect();
            (!judged.is_empty()).then(|| stripe_report(set, &judged))
        })
        .collect())
    }

    pub fn label_report(&self) -> Result<LabelCooccurrence, ReviewError> {
        let finals = self.final_verdicts()?;
        Ok(label_cooccurrence(
            finals
                .values()
                .filter(|f| f.verdict == Verdict::Type4Clone)
                .map(|f| &f.labels),
        ))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::pairs::stripe_of;

    pub(crate) fn pair(i: usize, set: SetLabel) -> ScoredPair {
        let (cd, cm) = match set {
            SetLabel::Candidate => (0.7, Some(0.97)),
            SetLabel::Baseline => (0.3, None),
            _ => (0.9, None),
        };
        ScoredPair {
            pair_id: PairId::new(format!("a{i:03}"), format!("b{i:03}")),
            cd_s: cd,
            cm_s: cm,
            set,
            stripe: Some(stripe_of(cd, cm, set).unwrap()),
            same_name: i % 2 == 0,
            signature_compatible: true,
            shared_name: None,
        }
    }

    pub(crate) fn session(n: usize, raters: &[&str]) -> Session {
        Session::create(
            NewSession {
                name: "s1".into(),
                mode: SessionMode::Full,
                raters: raters.iter().map(|r| r.to_string()).collect(),
                seed: 9,
                pairs: (0..n).map(|i| pair(i, SetLabel::Candidate)).collect(),
                functions: vec![],
            },
            None,
        )
        .unwrap()
    }

    pub(crate) fn judge(id: &PairId, rater: &str, verdict: Verdict, labels: &[Label]) -> Judgment {
        Judgment {
            session_id: String::new(),
            pair_id: id.clone(),
            rater_id: rater.into(),
            verdict,
            labels: labels.iter().copied().collect(),
            note: String::new(),
            coherent: None,
            complete: None,
            timestamp: None,
        }
    }

    #[test]
    fn creation_rules() {
        let s = session(30, &["r1", "r2"]);
        assert_eq!(s.progress().expected_judgments, 60);
        assert_eq!(session(1, &["r1"]).progress().expected_judgments, 1);
        let empty = NewSession {
            name: "e".into(),
            mode: SessionMode::Pilot,
            raters: vec!["r".into()],
            seed: 0,
            pairs: vec![],
            functions: vec![],
        };
        assert_eq!(
            Session::create(empty, None).unwrap_err(),
            ReviewError::EmptySample
        );
        let a = s.order("r1").unwrap();
        let b = s.order("r2").unwrap();
        assert_ne!(a, b);
        let mut sorted = a.to_vec();
        sorted.sort();
        assert_eq!(sorted, s.pairs.keys().cloned().collect::<Vec<_>>());
    }

    #[test]
    fn submission_rules() {
        let mut s = session(3, &["r1", "r2"]);
        let id = s.pairs.keys().next().unwrap().clone();
        let ok = judge(
            &id,
            "r1",
            Verdict::Type4Clone,
            &[Label::SafeMath, Label::AddCheck],
        );
        assert_eq!(s.submit(ok).unwrap(), Ack::Stored);
        let bad = judge(&id, "r1", Verdict::NonClone, &[Label::Modifier]);
        assert_eq!(s.submit(bad).unwrap_err(), ReviewError::LabelsWithoutClone);
        assert_eq!(
            s.submit(judge(&id, "r1", Verdict::NonClone, &[])).unwrap(),
            Ack::Overwritten
        );
        assert_eq!(s.audit().len(), 1);
        assert_eq!(s.judgment(&id, "r1").unwrap().verdict, Verdict::NonClone);
        assert!(matches!(
            s.submit(judge(&id, "r9", Verdict::NonClone, &[])),
            Err(ReviewError::UnknownRater(_))
        ));
        let stranger = PairId::new("x", "y");
        assert!(matches!(
            s.submit(judge(&stranger, "r1", Verdict::NonClone, &[])),
            Err(ReviewError::UnknownPair(_))
        ));
        s.close();
        assert!(matches!(
            s.submit(judge(&id, "r2", Verdict::NonClone, &[])),
            Err(ReviewError::SessionClosed(_))
        ));
    }

    #[test]
    fn next_walks_the_order() {
        let mut s = session(3, &["r1"]);
        let order = s.order("r1").unwrap().to_vec();
        for id in &order {
            let next = s.next("r1").unwrap().unwrap();
            assert_eq!(&next.pair.pair_id, id);
            s.submit(judge(id, "r1", Verdict::NonClone, &[])).unwrap();
        }
        assert!(s.next("r1").unwrap().is_none());
    }

    #[test]
    fn conflicts_and_resolution() {
        let mut s = session(4, &["r1", "r2"]);
        let ids: Vec<PairId> = s.pairs.keys().cloned().collect();
        for (i, id) in ids.iter().enumerate() {
            s.submit(judge(id, "r1", Verdict::Type4Clone, &[Label::Modifier]))
                .unwrap();
            let v = if i < 2 {
                Verdict::NonClone
            } else {
                Verdict::Type4Clone
            };
            s.submit(judge(id, "r2", v, &[])).unwrap();
        }
        assert_eq!(s.raw_conflicts(), ids[..2].to_vec());
        assert_eq!(s.conflicts().len(), 2);
        assert!(matches!(
            s.final_verdicts(),
            Err(ReviewError::UnresolvedConflicts(2))
        ));
        let res = |id: &PairId, v| Resolution {
            pair_id: id.clone(),
            verdict: v,
            labels: BTreeSet::new(),
            note: String::new(),
            timestamp: None,
        };
        assert!(matches!(
            s.resolve(res(&ids[3], Verdict::NonClone)),
            Err(ReviewError::NotInConflict(_))
        ));
        assert_eq!(
            s.resolve(res(&ids[0], Verdict::NonClone)).unwrap(),
            Ack::Stored
        );
        assert_eq!(s.conflicts().len(), 1);
        assert_eq!(
            s.resolve(res(&ids[0], Verdict::Type3Clone)).unwrap(),
            Ack::Overwritten
        );
        assert_eq!(s.audit().len(), 1);
        s.resolve(res(&ids[1], Verdict::NonClone)).unwrap();
        assert!(s.conflicts().is_empty());
        let finals = s.final_verdicts().unwrap();
        assert_eq!(finals[&ids[0]].verdict, Verdict::Type3Clone);
        assert_eq!(finals[&ids[2]].verdict, Verdict::Type4Clone);
        assert!(finals[&ids[2]].labels.contains(&Label::Modifier));
    }

    #[test]
    fn verdict_wire_names() {
        assert_eq!(
            serde_json::to_string(&Verdict::Type4Clone).unwrap(),
            "\"type4_clone\""
        );
        assert_eq!(
            serde_json::to_string(&Verdict::NonClone).unwrap(),
            "\"non_clone\""
        );
        assert_eq!(
            serde_json::to_string(&Label::SafeMath).unwrap(),
            "\"safemath\""
        );
        assert_eq!(
            serde_json::to_string(&Label::CallInternal).unwrap(),
            "\"call_internal\""
        );
        for l in Label::ALL {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
            assert_eq!(serde_json::to_string(&l).unwrap(), format!("\"{l}\""));
        }
    }
}
