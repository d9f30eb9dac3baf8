use serde::{Deserialize, Serialize};

use super::{ReviewError, Session};
use crate::pairs::PairId;

/// 2×2 table of collapsed (clone / not clone) verdicts of two raters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementTable {
    pub both_clone: u64,
    pub first_only: u64,
    pub second_only: u64,
    pub neither: u64,
}

impl AgreementTable {
    pub fn total(&self) -> u64 {
        self.both_clone + self.first_only + self.second_only + self.neither
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub raters: [String; 2],
    pub jointly_judged: u64,
    pub table: AgreementTable,
    pub kappa: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    /// Pairs with differing collapsed verdicts, resolved or not.
    pub conflicts: Vec<PairId>,
}

/// `(kappa, p_o, p_e)` of a 2×2 table. When `p_e` is 1 the table is a
/// perfect agreement on a single category and kappa is taken to be 1.
pub fn kappa_from_counts(t: &AgreementTable) -> Result<(f64, f64, f64), ReviewError> {
    let n = t.total();
    if n < 2 {
        return Err(ReviewError::TooFewCommonPairs(n as usize));
    }
    let n = n as f64;
    let p_o = (t.both_clone + t.neither) as f64 / n;
    let first_yes = (t.both_clone + t.first_only) as f64 / n;
    let second_yes = (t.both_clone + t.second_only) as f64 / n;
    let p_e = first_yes * second_yes + (1.0 - first_yes) * (1.0 - second_yes);
    if p_e >= 1.0 {
        return if p_o >= 1.0 {
            Ok((1.0, p_o, p_e))
        } else {
            Err(ReviewError::UndefinedKappa(p_o))
        };
    }
    Ok(((p_o - p_e) / (1.0 - p_e), p_o, p_e))
}

/// Cohen's kappa over the pairs both raters of a two-rater session judged.
pub fn cohen_kappa(session: &Session) -> Result<AgreementReport, ReviewError> {
    let raters = session.raters();
    if raters.len() != 2 {
        return Err(ReviewError::NeedTwoRaters(raters.len()));
    }
    let mut table = AgreementTable::default();
    let mut conflicts = Vec::new();
    for p in session.pairs() {
        let (Some(a), Some(b)) = (
            session.judgment(&p.pair_id, &raters[0]),
            session.judgment(&p.pair_id, &raters[1]),
        ) else {
            continue;
        };
        match (a.verdict.is_clone(), b.verdict.is_clone()) {
            (true, true) => table.both_clone += 1,
            (true, false) => table.first_only += 1,
            (false, true) => table.second_only += 1,
            (false, false) => table.neither += 1,
        }
        if a.verdict.is_clone() != b.verdict.is_clone() {
            conflicts.push(p.pair_id.clone());
        }
    }
    let (kappa, p_o, p_e) = kappa_from_counts(&table)?;
    Ok(AgreementReport {
        raters: [raters[0].clone(), raters[1].clone()],
        jointly_judged: table.total(),
        table,
        kappa,
        observed_agreement: p_o,
        expected_agreement: p_e,
        conflicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::review::tests::{judge, session};
    use crate::review::Verdict;

    fn table(a: u64, b: u64, c: u64, d: u64) -> AgreementTable {
        AgreementTable {
            both_clone: a,
            first_only: b,
            second_only: c,
            neither: d,
        }
    }

    #[test]
    fn hand_computed_tables() {
        let (k, po, pe) = kappa_from_counts(&table(20, 10, 5, 15)).unwrap();
        assert!((po - 0.70).abs() < 1e-12);
        assert!((pe - 0.50).abs() < 1e-12);
        assert!((k - 0.40).abs() < 1e-12);
        let (k, po, pe) = kappa_from_counts(&table(0, 7, 0, 0)).unwrap();
        assert_eq!((k, po, pe), (0.0, 0.0, 0.0));
        assert_eq!(kappa_from_counts(&table(9, 0, 0, 0)).unwrap().0, 1.0);
        assert_eq!(kappa_from_counts(&table(4, 0, 0, 5)).unwrap().0, 1.0);
        assert_eq!(
            kappa_from_counts(&table(1, 0, 0, 0)).unwrap_err(),
            ReviewError::TooFewCommonPairs(1)
        );
    }

    #[test]
    fn session_agreement() {
        let mut s = session(4, &["r1", "r2"]);
        let ids: Vec<_> = s.pairs().map(|p| p.pair_id.clone()).collect();
        for (i, id) in ids.iter().enumerate() {
            s.submit(judge(id, "r1", Verdict::Type4Clone, &[])).unwrap();
            let v = if i == 0 {
                Verdict::Type3Clone
            } else {
                Verdict::Type4Clone
            };
            s.submit(judge(id, "r2", v, &[])).unwrap();
        }
        let rep = cohen_kappa(&s).unwrap();
        assert_eq!(rep.table, table(3, 1, 0, 0));
        assert_eq!(rep.conflicts, vec![ids[0].clone()]);
        assert!(matches!(
            cohen_kappa(&session(2, &["r1"])),
            Err(ReviewError::NeedTwoRaters(1))
        ));
    }
}
