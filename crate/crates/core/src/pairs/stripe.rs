use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SetLabel;
use crate::error::{Error, Result};

/// Bin edges shared by the three schemes.
const CM_EDGES: [f64; 5] = [0.80, 0.85, 0.90, 0.95, 1.00];
const LOW_CD_EDGES: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 0.8];
const HIGH_CD_EDGES: [f64; 5] = [0.80, 0.85, 0.90, 0.95, 1.00];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StripeScheme {
    /// cm_s × cd_s grid of the candidate set.
    CandidateGrid,
    /// cd_s bands of width 0.2 over [0, 0.8].
    BaselineBands,
    /// cd_s bands of width 0.05 over (0.8, 1.0].
    SupplementaryBands,
}

impl StripeScheme {
    pub fn for_label(label: SetLabel) -> Option<Self> {
        match label {
            SetLabel::Candidate => Some(StripeScheme::CandidateGrid),
            SetLabel::Baseline => Some(StripeScheme::BaselineBands),
            SetLabel::Supplementary => Some(StripeScheme::SupplementaryBands),
            SetLabel::Degenerate => None,
        }
    }

    fn cd_edges(self) -> &'static [f64; 5] {
        match self {
            StripeScheme::CandidateGrid | StripeScheme::BaselineBands => &LOW_CD_EDGES,
            StripeScheme::SupplementaryBands => &HIGH_CD_EDGES,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            StripeScheme::CandidateGrid => "candidate",
            StripeScheme::BaselineBands => "baseline",
            StripeScheme::SupplementaryBands => "supplementary",
        }
    }

    /// Every stripe of the scheme, in ascending order.
    pub fn stripes(self) -> Vec<StripeId> {
        let cm_bins: Vec<Option<u8>> = match self {
            StripeScheme::CandidateGrid => (0..4).map(Some).collect(),
            _ => vec![None],
        };
        cm_bins
            .into_iter()
            .flat_map(|cm| {
                (0..4).map(move |cd| StripeId {
                    scheme: self,
                    cm_bin: cm,
                    cd_bin: cd,
                })
            })
            .collect()
    }
}

/// A similarity interval. Intervals are lower-open / upper-closed; the
/// lowest cd_s bin of each scheme is also closed below so its range is
/// covered without gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        (v > self.lo || (self.lo_closed && v == self.lo)) && v <= self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_closed { '[' } else { '(' };
        write!(f, "{open}{:.2},{:.2}]", self.lo, self.hi)
    }
}

/// Bin index of `v` in `edges`, or `None` when out of range.
fn bin_of(v: f64, edges: &[f64; 5], lowest_closed: bool) -> Option<u8> {
    if v > edges[4] || v < edges[0] || (v == edges[0] && !lowest_closed) || v.is_nan() {
        return None;
    }
    (0..4u8).find(|&i| v <= edges[i as usize + 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StripeId {
    pub scheme: StripeScheme,
    /// Comment-similarity bin, candidate grid only (0 = lowest).
    pub cm_bin: Option<u8>,
    /// Code-similarity bin (0 = lowest).
    pub cd_bin: u8,
}

impl StripeId {
    pub fn cm_interval(&self) -> Option<Interval> {
        self.cm_bin.map(|i| Interval {
            lo: CM_EDGES[i as usize],
            hi: CM_EDGES[i as usize + 1],
            lo_closed: false,
        })
    }

    pub fn cd_interval(&self) -> Interval {
        let edges = self.scheme.cd_edges();
        let i = self.cd_bin as usize;
        Interval {
            lo: edges[i],
            hi: edges[i + 1],
            lo_closed: i == 0,
        }
    }
}

impl fmt::Display for StripeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.scheme.tag())?;
        if let Some(cm) = self.cm_interval() {
            write!(f, " cm{cm}")?;
        }
        write!(f, " cd{}", self.cd_interval())
    }
}

impl FromStr for StripeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown stripe `{s}`"));
        let scheme = match s.split(' ').next() {
            Some("candidate") => StripeScheme::CandidateGrid,
            Some("baseline") => StripeScheme::BaselineBands,
            Some("supplementary") => StripeScheme::SupplementaryBands,
            _ => return Err(bad()),
        };
        scheme
            .stripes()
            .into_iter()
            .find(|id| id.to_string() == s)
            .ok_or_else(bad)
    }
}

impl Serialize for StripeId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StripeId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Stripe of a classified pair.
pub fn stripe_of(cd_s: f64, cm_s: Option<f64>, label: SetLabel) -> Result<StripeId> {
    let scheme = StripeScheme::for_label(label)
        .ok_or_else(|| Error::Contract("degenerate pairs have no stripe".into()))?;
    let out_of_range = |what: &str, v: f64| {
        Error::Contract(format!(
            "{what} = {v} outside the {} scheme range",
            scheme.tag()
        ))
    };
    let cd_bin = bin_of(cd_s, scheme.cd_edges(), true).ok_or_else(|| out_of_range("cd_s", cd_s))?;
    let cm_bin = match scheme {
        StripeScheme::CandidateGrid => {
            let cm = cm_s.ok_or_else(|| Error::Contract("candidate stripe needs cm_s".into()))?;
            Some(bin_of(cm, &CM_EDGES, false).ok_or_else(|| out_of_range("cm_s", cm))?)
        }
        _ => None,
    };
    Ok(StripeId {
        scheme,
        cm_bin,
        cd_bin,
    })
}
