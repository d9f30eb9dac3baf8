use std::collections::BTreeMap;

use soliclone_core::sampling::{allocate, normal_quantile, sample_size, z_for};
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn quantile_matches_statrs() {
    let n = Normal::new(0.0, 1.0).unwrap();
    for i in 1..1000 {
        let p = i as f64 / 1000.0;
        let want = n.inverse_cdf(p);
        assert!(
            (normal_quantile(p) - want).abs() < 1e-6 * want.abs().max(1.0),
            "p = {p}"
        );
    }
    for p in [1e-9, 1e-6, 0.001, 0.999, 1.0 - 1e-6] {
        let want = n.inverse_cdf(p);
        assert!(
            (normal_quantile(p) - want).abs() < 1e-6 * want.abs().max(1.0),
            "p = {p}"
        );
    }
}

#[test]
fn critical_values() {
    assert!((z_for(0.95).unwrap() - 1.959964).abs() < 1e-6);
    assert!((z_for(0.99).unwrap() - 2.575829).abs() < 1e-6);
    assert!((z_for(0.90).unwrap() - 1.644854).abs() < 1e-6);
}

#[test]
fn published_sample_sizes() {
    assert_eq!(sample_size(0.95, 0.05, 0.5).unwrap(), 385);
    assert_eq!(sample_size(0.95, 0.10, 0.5).unwrap(), 97);
    assert_eq!(sample_size(0.95, 1.0, 0.5).unwrap(), 1);
}

/// Candidate stripe populations and the published allocation of 385.
const CANDIDATE_POPULATIONS: [u64; 16] = [
    755738, 193771, 67977, 830, 138403, 26600, 3697, 23, 1000083, 61071, 20692, 198, 417367, 37226,
    19186, 185,
];
const CANDIDATE_PUBLISHED: [u64; 16] = [106, 27, 10, 0, 19, 4, 1, 0, 140, 9, 3, 0, 58, 5, 3, 0];

#[test]
fn candidate_allocation_within_one() {
    let pops: BTreeMap<usize, u64> = CANDIDATE_POPULATIONS.iter().copied().enumerate().collect();
    assert_eq!(pops.values().sum::<u64>(), 2_743_047);
    let got = allocate(&pops, 385);
    assert_eq!(got.total(), 385);
    assert_eq!(got.shares[&0], 106);
    for (i, want) in CANDIDATE_PUBLISHED.iter().enumerate() {
        let have = got.shares[&i];
        assert!(have.abs_diff(*want) <= 1, "stripe {i}: {have} vs {want}");
    }
}

#[test]
fn band_allocations_match_published() {
    let baseline: BTreeMap<usize, u64> = [
        44_573_449_757u64,
        19_215_400_058,
        5_087_296_833,
        19_805_198_292,
    ]
    .into_iter()
    .enumerate()
    .collect();
    let got: Vec<u64> = allocate(&baseline, 385).shares.into_values().collect();
    assert_eq!(got, vec![194, 83, 22, 86]);
    let supplementary: BTreeMap<usize, u64> = [
        1_048_024_727u64,
        1_297_854_132,
        2_450_097_921,
        3_404_977_654,
    ]
    .into_iter()
    .enumerate()
    .collect();
    let got: Vec<u64> = allocate(&supplementary, 385).shares.into_values().collect();
    assert_eq!(got, vec![49, 61, 115, 160]);
}
