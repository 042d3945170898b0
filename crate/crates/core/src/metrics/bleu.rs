use std::collections::HashMap;

use serde::{Deserialize, Serialize};

const MAX_ORDER: usize = 4;

/// Per-order precisions, brevity penalty and the final sentence score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuBreakdown {
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub score: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
}

/// Lower-case, split punctuation into its own tokens, split on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() + 8);
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_ascii_punctuation() || (!c.is_ascii() && is_unicode_punct(c)) {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.push(c);
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

fn is_unicode_punct(c: char) -> bool {
    matches!(
        c,
        '\u{2010}'
            ..='\u{2027}'
                | '\u{3001}'
                | '\u{3002}'
                | '\u{ff0c}'
                | '\u{ff1a}'
                | '\u{ff1b}'
                | '\u{ff01}'
                | '\u{ff1f}'
                | '\u{00ab}'
                | '\u{00bb}'
    )
}

/// Sentence BLEU-4 with uniform weights and no smoothing.
pub fn bleu4(candidate: &str, reference: &str) -> BleuBreakdown {
    bleu4_tokens(&tokenize(candidate), &tokenize(reference))
}

pub fn bleu4_tokens<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> BleuBreakdown {
    let cand: Vec<&str> = candidate.iter().map(AsRef::as_ref).collect();
    let refs: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    let c = cand.len();
    let r = refs.len();

    let mut precisions = [0.0; MAX_ORDER];
    for (i, p) in precisions.iter_mut().enumerate() {
        let n = i + 1;
        if c < n {
            continue;
        }
        let ref_counts = ngram_counts(&refs, n);
        let cand_counts = ngram_counts(&cand, n);
        let clipped: usize =
            cand_counts.iter().map(|(gram, &count)| count.min(ref_counts.get(gram).copied().unwrap_or(0))).sum();
        *p = clipped as f64 / (c - n + 1) as f64;
    }

    // BP -> 0 as the candidate shrinks to nothing; a non-empty reference
    // against an empty candidate therefore reports 0.
    let brevity_penalty = if c > r {
        1.0
    } else if c == 0 {
        if r == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };

    let score = if precisions.contains(&0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
        (brevity_penalty * log_mean.exp()).clamp(0.0, 1.0)
    };

    BleuBreakdown { precisions, brevity_penalty, score, candidate_len: c, reference_len: r }
}

fn ngram_counts<'t, 's>(tokens: &'t [&'s str], n: usize) -> HashMap<&'t [&'s str], usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_detaches_punctuation() {
        assert_eq!(
            tokenize("Malignant glands, with Necrosis."),
            vec!["malignant", "glands", ",", "with", "necrosis", "."]
        );
        assert!(tokenize("   ").is_empty());
    }

    #[test]
    fn identical_sentence() {
        let b = bleu4("the tumor shows marked nuclear atypia", "the tumor shows marked nuclear atypia");
        assert_eq!(b.score, 1.0);
        assert_eq!(b.brevity_penalty, 1.0);
    }

    #[test]
    fn no_shared_four_gram() {
        let b = bleu4("the tumor shows atypia today", "the tumor lacks atypia today");
        assert_eq!(b.precisions[3], 0.0);
        assert_eq!(b.score, 0.0);
    }

    #[test]
    fn half_length_prefix_of_six_tokens() {
        // c = 3, r = 6: p1..p3 = 1, no 4-grams in the candidate.
        let b = bleu4("a b c", "a b c d e f");
        assert_eq!(b.precisions, [1.0, 1.0, 1.0, 0.0]);
        assert!((b.brevity_penalty - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(b.score, 0.0);
    }

    #[test]
    fn half_length_prefix_of_eight_tokens() {
        let b = bleu4("a b c d", "a b c d e f g h");
        assert_eq!(b.precisions, [1.0; 4]);
        assert!((b.score - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn clipping_limits_repeats() {
        let b = bleu4("the the the the", "the cat");
        assert_eq!(b.precisions[0], 0.25);
    }

    #[test]
    fn empty_candidate() {
        let b = bleu4("", "some reference text here");
        assert_eq!(b.score, 0.0);
        assert_eq!(b.brevity_penalty, 0.0);
    }
}
