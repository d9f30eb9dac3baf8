//! Baseline embedders checked against values computed independently
//! (FNV-1a over FastText-style n-grams, evaluated outside this crate).

use soliclone_core::embed::baseline::{code_vector, comment_vector, subword_hash_sum};
use soliclone_core::embed::{code_similarity_raw, comment_similarity_raw};

const TRANSFER_BUCKETS: [(usize, f64); 18] = [
    (0, 1.0),
    (10, -1.0),
    (17, -1.0),
    (20, 1.0),
    (31, 1.0),
    (38, 1.0),
    (43, -1.0),
    (50, -1.0),
    (55, -1.0),
    (63, -1.0),
    (78, 1.0),
    (79, -1.0),
    (100, 1.0),
    (107, -1.0),
    (118, -1.0),
    (123, 2.0),
    (125, 1.0),
    (127, 1.0),
];

#[test]
fn transfer_hash_sum_matches_oracle() {
    let v = subword_hash_sum(["transfer"], 128);
    let mut expected = vec![0.0; 128];
    for (i, x) in TRANSFER_BUCKETS {
        expected[i] = x;
    }
    assert_eq!(v, expected);
    // bucket 88 receives +1 and -1 and cancels
    assert_eq!(v[88], 0.0);
}

#[test]
fn transfer_vector_is_normalized_oracle() {
    let v = code_vector("transfer", 128);
    let norm = 21f64.sqrt();
    for (i, x) in TRANSFER_BUCKETS {
        assert!((v[i] - x / norm).abs() < 1e-12, "bucket {i}");
    }
    assert!((norm - 4.58257569495584).abs() < 1e-12);
}

#[test]
fn code_similarity_oracle() {
    let a = code_vector("balance + amount", 128);
    let b = code_vector("balance - amount", 128);
    assert!((code_similarity_raw(&a, &b) - 0.882148869802242).abs() < 1e-9);
}

#[test]
fn comment_similarity_oracle() {
    // no bucket collisions: x = (1,2,1,1,1), y = (1,0,1,0,1) → 3 / √24
    let x = comment_vector("Returns the balance of the owner", 384);
    let y = comment_vector("Returns owner balance", 384);
    let expected = 6f64.sqrt() / 4.0;
    assert!((comment_similarity_raw(&x, &y).unwrap() - expected).abs() < 1e-9);
}

#[test]
fn hand_computed_similarity_oracles() {
    let s = code_similarity_raw(&[1.0, 0.0], &[0.0, 1.0]);
    assert!((s - (1.0 - 2f64.sqrt() / 2.0)).abs() < 1e-9);
    let c = comment_similarity_raw(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
    assert!((c - 2f64.sqrt() / 2.0).abs() < 1e-9);
}
