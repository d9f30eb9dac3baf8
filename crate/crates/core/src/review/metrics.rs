use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Label, ReviewError, Verdict};
use crate::pairs::{ScoredPair, SetLabel, StripeId, StripeScheme};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn f1(&self) -> Option<f64> {
        match (self.precision(), self.recall()) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub matrix: ConfusionMatrix,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
    pub candidates_judged: u64,
    pub validation_rate: Option<f64>,
    pub same_name_judged: u64,
    pub same_name_validation_rate: Option<f64>,
}

impl MetricsReport {
    pub fn from_matrix(matrix: ConfusionMatrix) -> Self {
        MetricsReport {
            precision: matrix.precision(),
            recall: matrix.recall(),
            f1: matrix.f1(),
            specificity: matrix.specificity(),
            accuracy: matrix.accuracy(),
            candidates_judged: matrix.tp + matrix.fp,
            validation_rate: matrix.precision(),
            same_name_judged: 0,
            same_name_validation_rate: None,
            matrix,
        }
    }
}

/// Confusion counts from final verdicts: candidates give TP/FP, the
/// baseline and supplementary samples give FN/TN.
pub fn confusion_metrics(
    candidate: &[(&ScoredPair, Verdict)],
    baseline: &[(&ScoredPair, Verdict)],
    supplementary: &[(&ScoredPair, Verdict)],
) -> Result<MetricsReport, ReviewError> {
    if candidate.is_empty() {
        return Err(ReviewError::EmptyCandidateSet);
    }
    let mut m = ConfusionMatrix::default();
    for (_, v) in candidate {
        if v.is_clone() {
            m.tp += 1;
        } else {
            m.fp += 1;
        }
    }
    for (_, v) in baseline.iter().chain(supplementary) {
        if v.is_clone() {
            m.fn_ += 1;
        } else {
            m.tn += 1;
        }
    }
    let mut report = MetricsReport::from_matrix(m);
    let same: Vec<_> = candidate.iter().filter(|(p, _)| p.same_name).collect();
    report.same_name_judged = same.len() as u64;
    report.same_name_validation_rate = ratio(
        same.iter().filter(|(_, v)| v.is_clone()).count() as u64,
        same.len() as u64,
    );
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripeRow {
    /// `None` on the totals row.
    pub stripe: Option<StripeId>,
    pub judged: u64,
    pub confirmed: u64,
    pub validation_rate: Option<f64>,
    pub same_name: u64,
    pub same_name_confirmed: u64,
    pub same_name_validation_rate: Option<f64>,
}

impl StripeRow {
    fn add(&mut self, same_name: bool, clone: bool) {
        self.judged += 1;
        self.confirmed += clone as u64;
        if same_name {
            self.same_name += 1;
            self.same_name_confirmed += clone as u64;
        }
    }

    fn finish(&mut self) {
        self.validation_rate = ratio(self.confirmed, self.judged);
        self.same_name_validation_rate = ratio(self.same_name_confirmed, self.same_name);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripeReport {
    pub set: SetLabel,
    pub rows: Vec<StripeRow>,
    pub total: StripeRow,
}

/// Per-stripe validation rates of one judged set. Every stripe of the set's
/// scheme gets a row, judged or not.
pub fn stripe_report(set: SetLabel, judged: &[(&ScoredPair, Verdict)]) -> StripeReport {
    let scheme = StripeScheme::for_label(set);
    let blank = |stripe: Option<StripeId>| StripeRow {
        stripe,
        judged: 0,
        confirmed: 0,
        validation_rate: None,
        same_name: 0,
        same_name_confirmed: 0,
        same_name_validation_rate: None,
    };
    let mut rows: BTreeMap<StripeId, StripeRow> = scheme
        .map(|s| s.stripes())
        .unwrap_or_default()
        .into_iter()
        .map(|s| (s, blank(Some(s))))
        .collect();
    let mut total = blank(None);
    for (p, v) in judged {
        if let Some(stripe) = p.stripe {
            rows.entry(stripe)
                .or_insert_with(|| blank(Some(stripe)))
                .add(p.same_name, v.is_clone());
        }
        total.add(p.same_name, v.is_clone());
    }
    let mut rows: Vec<StripeRow> = rows.into_values().collect();
    rows.iter_mut().for_each(StripeRow::finish);
    total.finish();
    StripeReport { set, rows, total }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCount {
    pub labels: Vec<Label>,
    pub count: u64,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCooccurrence {
    /// Type-4 judgments considered.
    pub total: u64,
    pub unlabeled: u64,
    pub singles: Vec<LabelCount>,
    pub pairs: Vec<LabelCount>,
    pub triplets: Vec<LabelCount>,
    /// Judgments with four or more labels, by label set.
    pub four_plus: Vec<LabelCount>,
    pub four_plus_total: u64,
}

/// Tallies each Type-4 label set by its size. Lists are ordered by count
/// (descending), then by label set.
pub fn label_cooccurrence<'a>(
    label_sets: impl IntoIterator<Item = &'a BTreeSet<Label>>,
) -> LabelCooccurrence {
    let mut total = 0u64;
    let mut unlabeled = 0u64;
    let mut buckets: [BTreeMap<Vec<Label>, u64>; 4] = Default::default();
    for set in label_sets {
        total += 1;
        let key: Vec<Label> = set.iter().copied().collect();
        match key.len() {
            0 => unlabeled += 1,
            n => *buckets[n.min(4) - 1].entry(key).or_default() += 1,
        }
    }
    let ranked = |b: &BTreeMap<Vec<Label>, u64>| {
        let mut v: Vec<LabelCount> = b
            .iter()
            .map(|(labels, &count)| LabelCount {
                labels: labels.clone(),
                count,
                percentage: if total > 0 {
                    100.0 * count as f64 / total as f64
                } else {
                    0.0
                },
            })
            .collect();
        v.sort_by(|x, y| y.count.cmp(&x.count).then_with(|| x.labels.cmp(&y.labels)));
        v
    };
    LabelCooccurrence {
        total,
        unlabeled,
        singles: ranked(&buckets[0]),
        pairs: ranked(&buckets[1]),
        triplets: ranked(&buckets[2]),
        four_plus: ranked(&buckets[3]),
        four_plus_total: buckets[3].values().sum(),
    }
}
