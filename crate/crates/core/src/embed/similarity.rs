use super::Embedding;
use crate::error::{Error, Result};

fn check_dims(a: &Embedding, b: &Embedding) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(())
}

pub(crate) fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    sq_norm(v).sqrt()
}

/// Normalized Euclidean similarity: `1 - |a - b| / (|a| + |b|)`.
///
/// Lies in [0, 1], is symmetric, and is invariant to scaling both vectors by
/// the same positive factor. Two zero vectors are defined to be identical.
pub fn code_similarity_raw(a: &[f64], b: &[f64]) -> f64 {
    code_similarity_normed(a, b, norm(a), norm(b))
}

/// [`code_similarity_raw`] with precomputed norms.
pub(crate) fn code_similarity_normed(a: &[f64], b: &[f64], norm_a: f64, norm_b: f64) -> f64 {
    let denom = norm_a + norm_b;
    if denom == 0.0 {
        return 1.0;
    }
    let dist = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    (1.0 - dist / denom).clamp(0.0, 1.0)
}

/// Cosine similarity with negative values clamped to zero. `None` when both
/// vectors are zero.
pub fn comment_similarity_raw(a: &[f64], b: &[f64]) -> Option<f64> {
    comment_similarity_normed(a, b, sq_norm(a), sq_norm(b))
}

/// [`comment_similarity_raw`] with precomputed squared norms.
pub(crate) fn comment_similarity_normed(a: &[f64], b: &[f64], sq_a: f64, sq_b: f64) -> Option<f64> {
    if sq_a == 0.0 && sq_b == 0.0 {
        return None;
    }
    let denom = (sq_a * sq_b).sqrt();
    if denom == 0.0 {
        return Some(0.0);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Some((dot / denom).clamp(0.0, 1.0))
}

pub fn code_similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    check_dims(a, b)?;
    Ok(code_similarity_raw(&a.values, &b.values))
}

pub fn comment_similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    check_dims(a, b)?;
    comment_similarity_raw(&a.values, &b.values).ok_or(Error::UndefinedSimilarity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec(), "test").unwrap()
    }

    #[test]
    fn code_similarity_examples() {
        assert_eq!(
            code_similarity(&e(&[0.3, -2.0]), &e(&[0.3, -2.0])).unwrap(),
            1.0
        );
        let s = code_similarity(&e(&[1.0, 0.0]), &e(&[0.0, 1.0])).unwrap();
        assert!((s - (1.0 - 2f64.sqrt() / 2.0)).abs() < 1e-12);
        assert_eq!(
            code_similarity(&e(&[1.0, -3.0]), &e(&[-1.0, 3.0])).unwrap(),
            0.0
        );
        assert_eq!(
            code_similarity(&e(&[0.0, 0.0]), &e(&[0.0, 0.0])).unwrap(),
            1.0
        );
    }

    #[test]
    fn comment_similarity_examples() {
        assert_eq!(
            comment_similarity(&e(&[0.2, 0.7]), &e(&[0.2, 0.7])).unwrap(),
            1.0
        );
        assert_eq!(
            comment_similarity(&e(&[1.0, 0.0]), &e(&[0.0, 1.0])).unwrap(),
            0.0
        );
        let s = comment_similarity(&e(&[1.0, 1.0]), &e(&[1.0, 0.0])).unwrap();
        assert!((s - 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(
            comment_similarity(&e(&[1.0, 0.0]), &e(&[-1.0, 0.0])).unwrap(),
            0.0
        );
        assert!(matches!(
            comment_similarity(&e(&[0.0, 0.0]), &e(&[0.0, 0.0])),
            Err(Error::UndefinedSimilarity)
        ));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            code_similarity(&e(&[1.0]), &e(&[1.0, 2.0])),
            Err(Error::DimensionMismatch {
                expected: 1,
                actual: 2
            })
        ));
    }
}
