//! Sample sizes, proportional allocation over stripes, and seeded draws.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairs::{ScoredPair, SetLabel, StripeId, StripeScheme};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_MARGIN: f64 = 0.05;
pub const DEFAULT_PROPORTION: f64 = 0.5;
pub const PRNG_NAME: &str = "ChaCha8";

/// Inverse of the standard normal CDF (Acklam's rational approximation,
/// relative error below 1.2e-9).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Two-sided critical value for `confidence`.
pub fn z_for(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence must be in (0,1), got {confidence}"
        )));
    }
    Ok(normal_quantile(1.0 - (1.0 - confidence) / 2.0))
}

/// `ceil(z² p(1−p) / e²)`, the infinite-population sample size.
pub fn sample_size(confidence: f64, margin: f64, proportion: f64) -> Result<u64> {
    let z = z_for(confidence)?;
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "margin must be in (0,1], got {margin}"
        )));
    }
    if !(0.0..=1.0).contains(&proportion) {
        return Err(Error::InvalidArgument(format!(
            "proportion must be in [0,1], got {proportion}"
        )));
    }
    let n = z * z * proportion * (1.0 - proportion) / (margin * margin);
    Ok(n.ceil() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation<K> {
    pub shares: BTreeMap<K, u64>,
    /// Set when the request exceeded the total population.
    pub capped: bool,
}

impl<K> Allocation<K> {
    pub fn total(&self) -> u64 {
        self.shares.values().sum()
    }
}

/// Largest-remainder apportionment of `n` proportional to `populations`.
/// Quotas and remainders are computed in exact integer arithmetic; equal
/// remainders go to the earlier key.
pub fn allocate<K: Ord + Clone>(populations: &BTreeMap<K, u64>, n: u64) -> Allocation<K> {
    let total: u128 = populations.values().map(|&p| p as u128).sum();
    let mut capped = false;
    let mut n = n as u128;
    if n > total {
        log::warn!("requested sample of {n} exceeds population {total}; capping");
        n = total;
        capped = true;
    }
    let mut shares = BTreeMap::new();
    if total == 0 {
        for k in populations.keys() {
            shares.insert(k.clone(), 0);
        }
        return Allocation { shares, capped };
    }
    let mut remainders = Vec::with_capacity(populations.len());
    let mut assigned = 0u128;
    for (order, (k, &pop)) in populations.iter().enumerate() {
        let scaled = n * pop as u128;
        let floor = scaled / total;
        assigned += floor;
        shares.insert(k.clone(), floor as u64);
        if pop > 0 {
            remainders.push((scaled % total, order, k));
        }
    }
    remainders.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    for (_, _, k) in remainders.into_iter().take((n - assigned) as usize) {
        *shares.get_mut(k).expect("key present") += 1;
    }
    Allocation { shares, capped }
}

fn draw_with<T: Ord + Clone>(population: &[T], k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<T>> {
    let mut sorted = population.to_vec();
    sorted.sort();
    sorted.dedup();
    if k > sorted.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {k} items from a population of {}",
            sorted.len()
        )));
    }
    let mut picked: Vec<T> = index::sample(rng, sorted.len(), k)
        .into_iter()
        .map(|i| sorted[i].clone())
        .collect();
    picked.sort();
    Ok(picked)
}

/// Uniform sample of `k` distinct items without replacement, sorted.
pub fn draw<T: Ord + Clone>(population: &[T], k: usize, seed: u64) -> Result<Vec<T>> {
    draw_with(population, k, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Requested sample size: derived from confidence and margin, or fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    Auto,
    Fixed(u64),
}

impl std::str::FromStr for SampleSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(SampleSize::Auto);
        }
        s.parse().map(SampleSize::Fixed).map_err(|_| {
            Error::InvalidArgument(format!(
                "sample size must be `auto` or an integer, got `{s}`"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub set: SetLabel,
    pub confidence: f64,
    pub margin: f64,
    pub proportion: f64,
    pub z: f64,
    pub total_n: u64,
    pub capped: bool,
    pub seed: u64,
    pub prng: String,
    pub populations: BTreeMap<StripeId, u64>,
    pub allocations: BTreeMap<StripeId, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingParams {
    pub confidence: f64,
    pub margin: f64,
    pub proportion: f64,
    pub size: SampleSize,
    pub seed: u64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            confidence: DEFAULT_CONFIDENCE,
            margin: DEFAULT_MARGIN,
            proportion: DEFAULT_PROPORTION,
            size: SampleSize::Auto,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub plan: SamplePlan,
    pub pairs: Vec<ScoredPair>,
}

/// Stratified sample of the pairs labelled `set`, allocated over its
/// stripes in proportion to their populations. Stripes are drawn in order
/// from one generator seeded with `params.seed`.
pub fn stratified_sample(
    pairs: &[ScoredPair],
    set: SetLabel,
    params: &SamplingParams,
) -> Result<Sample> {
    let scheme = StripeScheme::for_label(set)
        .ok_or_else(|| Error::InvalidArgument(format!("the {set} set has no stripes to sample")))?;
    let z = z_for(params.confidence)?;
    let requested = match params.size {
        SampleSize::Auto => sample_size(params.confidence, params.margin, params.proportion)?,
        SampleSize::Fixed(n) => n,
    };
    let mut strata: BTreeMap<StripeId, Vec<&ScoredPair>> = scheme
        .stripes()
        .into_iter()
        .map(|s| (s, Vec::new()))
        .collect();
    for p in pairs.iter().filter(|p| p.set == set) {
        let stripe = p
            .stripe
            .ok_or_else(|| Error::Contract(format!("pair {} has no stripe", p.pair_id)))?;
        strata
            .get_mut(&stripe)
            .ok_or_else(|| {
                Error::Contract(format!(
                    "pair {} is in stripe {stripe} outside {set}",
                    p.pair_id
                ))
            })?
            .push(p);
    }
    let populations: BTreeMap<StripeId, u64> =
        strata.iter().map(|(k, v)| (*k, v.len() as u64)).collect();
    let allocation = allocate(&populations, requested);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut picked = Vec::with_capacity(allocation.total() as usize);
    for (stripe, members) in &strata {
        let k = allocation.shares[stripe] as usize;
        let ids: Vec<_> = members.iter().map(|p| &p.pair_id).collect();
        for id in draw_with(&ids, k, &mut rng)? {
            let p = members
                .iter()
                .find(|p| &p.pair_id == id)
                .expect("drawn from members");
            picked.push((*p).clone());
        }
    }
    picked.sort_by(|x, y| x.pair_id.cmp(&y.pair_id));
    Ok(Sample {
        plan: SamplePlan {
            set,
            confidence: params.confidence,
            margin: params.margin,
            proportion: params.proportion,
            z,
            total_n: allocation.total(),
            capped: allocation.capped,
            seed: params.seed,
            prng: PRNG_NAME.into(),
            populations,
            allocations: allocation.shares,
        },
        pairs: picked,
    })
}
