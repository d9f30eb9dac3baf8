//! Deterministic, dependency-free embedders.
//!
//! The code embedder is a FastText-style bag of character n-grams hashed into
//! a fixed number of signed buckets. The comment embedder is a hashed
//! term-frequency vector. Both are L2-normalized.

use crate::extractor::lexer::tokenize;
use crate::hashing::fnv1a64;

pub const MIN_NGRAM: usize = 3;
pub const MAX_NGRAM: usize = 5;

/// Character n-grams (3..=5) of `<token>`, FastText boundary markers included.
pub fn char_ngrams(token: &str) -> Vec<String> {
    let marked: Vec<char> = std::iter::once('<')
        .chain(token.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    for n in MIN_NGRAM..=MAX_NGRAM {
        if n > marked.len() {
            break;
        }
        out.extend(marked.windows(n).map(|w| w.iter().collect::<String>()));
    }
    out
}

/// Non-trivia lexical tokens of normalized code.
pub fn code_tokens(code: &str) -> Vec<&str> {
    tokenize(code)
        .into_iter()
        .filter(|t| !t.kind.is_trivia())
        .map(|t| &code[t.span])
        .collect()
}

/// Lowercased maximal alphanumeric runs.
pub fn comment_words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Unnormalized signed n-gram hash sum. Bucket is `h % dim`, sign is the top bit.
pub fn subword_hash_sum<'a>(tokens: impl IntoIterator<Item = &'a str>, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for tok in tokens {
        for gram in char_ngrams(tok) {
            let h = fnv1a64(gram.as_bytes());
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            v[(h % dim as u64) as usize] += sign;
        }
    }
    v
}

pub fn code_vector(code: &str, dim: usize) -> Vec<f64> {
    let mut v = subword_hash_sum(code_tokens(code), dim);
    l2_normalize(&mut v);
    v
}

pub fn comment_vector(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for w in comment_words(text) {
        v[(fnv1a64(w.as_bytes()) % dim as u64) as usize] += 1.0;
    }
    l2_normalize(&mut v);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ngrams_of_short_tokens() {
        assert_eq!(char_ngrams("a"), ["<a>"]);
        assert_eq!(char_ngrams("ab"), ["<ab", "ab>", "<ab>"]);
        // 8 chars + 2 markers: 8 trigrams, 7 four-grams, 6 five-grams
        assert_eq!(char_ngrams("transfer").len(), 21);
    }

    #[test]
    fn comment_words_split_and_lowercase() {
        assert_eq!(
            comment_words("@dev Returns the OWNER."),
            ["dev", "returns", "the", "owner"]
        );
    }

    #[test]
    fn vectors_are_unit_or_zero() {
        let v = code_vector("function f() public {}", 64);
        let n: f64 = v.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert!(code_vector("", 64).iter().all(|x| *x == 0.0));
        assert!(comment_vector("...", 64).iter().all(|x| *x == 0.0));
    }
}
