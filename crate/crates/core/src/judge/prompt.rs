//! Prompt rendering and response parsing.
//!
//! The two templates are load-bearing: downstream judgments are only
//! comparable across runs if the rendered text is byte-identical, so the
//! templates live here as code and are locked down by golden-file tests.

use super::{JudgeError, MatchQuery, MatchScale, Verdict};

/// Identifies the sense-matching template in cache records.
pub const MATCH_TEMPLATE_ID: &str = "match_v1";
/// Identifies the sense-recognition template in cache records.
pub const BINARY_TEMPLATE_ID: &str = "binary_v1";

/// Render the seven-point sense-matching prompt.
///
/// Slot 1 carries the dictionary definition, slot 2 the WordNet definition;
/// both are substituted verbatim. No trailing newline.
pub fn render_match_prompt(query: &MatchQuery) -> Result<String, JudgeError> {
    query.validate()?;
    let mut out = format!(
        "Please assess whether the two meanings of the English word '{}' are the same from a linguistic perspective.\n\
         1: {}\n\
         2: {}\n\
         \n\
         Please select one from the following and answer using only number.\n",
        query.word, query.dict_definition, query.wordnet_definition
    );
    for value in 1..=7u8 {
        let scale = MatchScale::new(value).expect("1..=7 in range");
        out.push_str(&format!("{}. {}", value, scale.label()));
        if value < 7 {
            out.push('\n');
        }
    }
    Ok(out)
}

/// Render the YES/NO sense-recognition prompt.
///
/// `marked_sentence` must contain exactly one `###…###` span enclosing the
/// target's surface form. No trailing newline.
pub fn render_binary_prompt(
    word: &str,
    marked_sentence: &str,
    definition: &str,
) -> Result<String, JudgeError> {
    if word.trim().is_empty() {
        return Err(JudgeError::EmptyField { field: "word" });
    }
    if definition.trim().is_empty() {
        return Err(JudgeError::EmptyField { field: "definition" });
    }
    check_single_marker_span(marked_sentence)?;
    Ok(format!(
        "Is the word '{word},' which is enclosed in ###, used in the following sentence with the following meaning?\n\
         Please answer YES or NO.\n\
         Sentence: {marked_sentence}\n\
         Meaning: {definition}"
    ))
}

fn check_single_marker_span(sentence: &str) -> Result<(), JudgeError> {
    let marks: Vec<usize> = sentence.match_indices("###").map(|(i, _)| i).collect();
    let reason = match marks.len() {
        0 => "no ###...### span",
        1 => "unbalanced ### marker",
        2 => {
            if marks[1] == marks[0] + 3 {
                "empty ###...### span"
            } else {
                return Ok(());
            }
        }
        _ => "multiple ###...### spans",
    };
    Err(JudgeError::BadMarkedSentence {
        sentence: sentence.to_string(),
        reason: reason.to_string(),
    })
}

/// Parse a scale response; `None` means INVALID.
///
/// A trimmed response that is a single integer 1..7 parses directly;
/// otherwise the first standalone integer in range wins (maximal digit runs,
/// so the "12" in "12 or 3" is twelve, not one). Anything else is INVALID.
pub fn parse_scale_response(text: &str) -> Option<MatchScale> {
    let trimmed = text.trim();
    let bytes = trimmed.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if let Ok(value) = trimmed[start..i].parse::<u8>() {
                if let Some(scale) = MatchScale::new(value) {
                    return Some(scale);
                }
            }
        } else {
            i += 1;
        }
    }
    None
}

/// Parse a YES/NO response from its leading token, ignoring case and
/// trailing punctuation.
pub fn parse_binary_response(text: &str) -> Verdict {
    let Some(first) = text.split_whitespace().next() else {
        return Verdict::Invalid;
    };
    let token = first.trim_end_matches(['.', ',', '!', '?', ';', ':']);
    if token.eq_ignore_ascii_case("yes") {
        Verdict::Yes
    } else if token.eq_ignore_ascii_case("no") {
        Verdict::No
    } else {
        Verdict::Invalid
    }
}
