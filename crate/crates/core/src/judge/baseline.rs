//! Deterministic lexical stand-in for the remote judge.
//!
//! Offline runs and tests need a backend with no network and no model
//! weights. This one scores definition pairs by Jaccard overlap of their
//! content tokens and maps the similarity onto the seven-point scale through
//! fixed, overridable thresholds. It is intentionally crude — its job is
//! determinism, not linguistic quality.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{JudgeError, MatchScale, Verdict};

/// Function words excluded from similarity scoring, sorted for binary search.
const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "him", "his",
    "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "may", "me", "might",
    "more", "most", "must", "my", "no", "nor", "not", "now", "of", "off", "on", "once", "only",
    "or", "other", "our", "ours", "out", "over", "own", "same", "shall", "she", "should", "so",
    "some", "such", "than", "that", "the", "their", "theirs", "them", "then", "there", "these",
    "they", "this", "those", "through", "to", "too", "under", "until", "up", "very", "was", "we",
    "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with",
    "would", "you", "your", "yours",
];

fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Lowercased alphabetic tokens minus stopwords.
fn content_tokens(text: &str) -> BTreeSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty() && !is_stopword(t))
        .map(str::to_string)
        .collect()
}

/// Minimum Jaccard similarity for each scale value from 1 down to 5;
/// any positive overlap below `somewhat_different` maps to 6, zero to 7.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineThresholds {
    pub exact: f64,
    pub almost: f64,
    pub similar: f64,
    pub neither: f64,
    pub somewhat_different: f64,
}

impl Default for BaselineThresholds {
    fn default() -> Self {
        BaselineThresholds {
            exact: 0.999,
            almost: 0.6,
            similar: 0.4,
            neither: 0.3,
            somewhat_different: 0.2,
        }
    }
}

impl BaselineThresholds {
    fn scale_for(&self, similarity: f64) -> MatchScale {
        let value = if similarity >= self.exact {
            1
        } else if similarity >= self.almost {
            2
        } else if similarity >= self.similar {
            3
        } else if similarity >= self.neither {
            4
        } else if similarity >= self.somewhat_different {
            5
        } else if similarity > 0.0 {
            6
        } else {
            7
        };
        MatchScale::new(value).expect("threshold table stays in 1..7")
    }
}

/// Jaccard similarity of the two texts' content tokens.
///
/// When neither side has any content token the overlap is undefined; the
/// texts then count as fully similar iff they are equal after trimming and
/// lowercasing, which keeps "identical strings → scale 1" unconditional.
pub fn lexical_similarity(def_a: &str, def_b: &str) -> f64 {
    let tokens_a = content_tokens(def_a);
    let tokens_b = content_tokens(def_b);
    if tokens_a.is_empty() && tokens_b.is_empty() {
        let same = def_a.trim().to_lowercase() == def_b.trim().to_lowercase();
        return if same { 1.0 } else { 0.0 };
    }
    let intersection = tokens_a.intersection(&tokens_b).count() as f64;
    let union = tokens_a.union(&tokens_b).count() as f64;
    intersection / union
}

/// Score a definition pair on the seven-point scale with default thresholds.
pub fn lexical_baseline_scale(def_a: &str, def_b: &str) -> Result<MatchScale, JudgeError> {
    lexical_baseline_scale_with(def_a, def_b, &BaselineThresholds::default())
}

/// Score a definition pair with explicit thresholds. Symmetric in `def_a`
/// and `def_b`.
pub fn lexical_baseline_scale_with(
    def_a: &str,
    def_b: &str,
    thresholds: &BaselineThresholds,
) -> Result<MatchScale, JudgeError> {
    if def_a.trim().is_empty() {
        return Err(JudgeError::EmptyField { field: "def_a" });
    }
    if def_b.trim().is_empty() {
        return Err(JudgeError::EmptyField { field: "def_b" });
    }
    Ok(thresholds.scale_for(lexical_similarity(def_a, def_b)))
}

/// YES/NO stand-in for sense recognition: YES iff the sentence (markers
/// stripped) shares any content token with the definition. Never INVALID.
pub fn lexical_baseline_binary(marked_sentence: &str, definition: &str) -> Verdict {
    let sentence = marked_sentence.replace("###", " ");
    let sentence_tokens = content_tokens(&sentence);
    let definition_tokens = content_tokens(definition);
    if sentence_tokens
        .intersection(&definition_tokens)
        .next()
        .is_some()
    {
        Verdict::Yes
    } else {
        Verdict::No
    }
}
