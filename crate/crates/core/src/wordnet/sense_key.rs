//! Sense-key parsing and formatting.
//!
//! A sense key is the stable textual identifier WordNet assigns to one sense
//! of one lemma, e.g. `say%2:32:15::` or `capable%5:00:00:able:00`. The
//! grammar is `lemma%ss_type:lex_filenum:lex_id:head_word:head_id` where the
//! two head fields are populated only for adjective satellites (ss_type 5).

use std::fmt;

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{PartOfSpeech, WordNetError};

/// A fully decomposed WordNet sense key.
///
/// Parsing is strict: every numeric field must carry its canonical width so
/// that [`SenseKey::to_string`] reproduces the input byte-for-byte.
#[derive(Clone, Debug, Eq, PartialEq, Ord, PartialOrd, Hash)]
pub struct SenseKey {
    raw: String,
    lemma: String,
    ss_type: u8,
    lex_filenum: u8,
    lex_id: u8,
    head_word: String,
    head_id: u8,
}

impl SenseKey {
    /// Parse a sense key, validating structure and field ranges.
    pub fn parse(text: &str) -> Result<SenseKey, WordNetError> {
        let malformed = |why: &str| WordNetError::MalformedSenseKey {
            key: text.to_string(),
            reason: why.to_string(),
        };

        if text.is_empty() {
            return Err(malformed("empty input"));
        }
        let (lemma, rest) = text
            .split_once('%')
            .ok_or_else(|| malformed("missing '%' separator"))?;
        if lemma.is_empty() {
            return Err(malformed("empty lemma"));
        }
        if lemma.chars().any(|c| c.is_ascii_uppercase() || c.is_whitespace()) {
            return Err(malformed("lemma must be lowercase with no whitespace"));
        }

        let fields: Vec<&str> = rest.split(':').collect();
        if fields.len() != 5 {
            return Err(malformed("expected 4 ':' separators after '%'"));
        }

        let ss_type: u8 = parse_digits(fields[0], 1).ok_or_else(|| malformed("bad ss_type"))?;
        if !(1..=5).contains(&ss_type) {
            return Err(WordNetError::SsTypeOutOfRange {
                key: text.to_string(),
                ss_type,
            });
        }
        let lex_filenum: u8 =
            parse_digits(fields[1], 2).ok_or_else(|| malformed("lex_filenum must be two digits"))?;
        let lex_id: u8 =
            parse_digits(fields[2], 2).ok_or_else(|| malformed("lex_id must be two digits"))?;
        if lex_id > 15 {
            return Err(malformed("lex_id out of range 0..15"));
        }

        let head_word = fields[3].to_string();
        let head_id: u8;
        if ss_type == 5 {
            if head_word.is_empty() {
                return Err(malformed("satellite key requires a head word"));
            }
            head_id = parse_digits(fields[4], 2)
                .ok_or_else(|| malformed("head_id must be two digits"))?;
            if head_id > 15 {
                return Err(malformed("head_id out of range 0..15"));
            }
        } else {
            if !head_word.is_empty() {
                return Err(malformed("head word only valid for ss_type 5"));
            }
            if !fields[4].is_empty() {
                return Err(malformed("head_id only valid for ss_type 5"));
            }
            head_id = 0;
        }

        Ok(SenseKey {
            raw: text.to_string(),
            lemma: lemma.to_string(),
            ss_type,
            lex_filenum,
            lex_id,
            head_word,
            head_id,
        })
    }

    /// The original key text.
    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// Lemma component (lowercase; multiword lemmas keep their underscores).
    pub fn lemma(&self) -> &str {
        &self.lemma
    }

    /// Synset type digit 1..5.
    pub fn ss_type(&self) -> u8 {
        self.ss_type
    }

    /// Lexicographer file number 0..99.
    pub fn lex_filenum(&self) -> u8 {
        self.lex_filenum
    }

    /// Lexical id distinguishing senses within one lexicographer file, 0..15.
    pub fn lex_id(&self) -> u8 {
        self.lex_id
    }

    /// Head word of the satellite's cluster; empty unless ss_type is 5.
    pub fn head_word(&self) -> &str {
        &self.head_word
    }

    /// Lexical id of the head word; meaningful only when ss_type is 5.
    pub fn head_id(&self) -> u8 {
        self.head_id
    }

    /// Part of speech implied by the ss_type digit.
    pub fn pos(&self) -> PartOfSpeech {
        PartOfSpeech::from_ss_type(self.ss_type).expect("ss_type validated at parse")
    }

    /// Re-serialize the decomposed fields in canonical form.
    ///
    /// For any key accepted by [`SenseKey::parse`] this equals the input.
    pub fn format_fields(&self) -> String {
        if self.ss_type == 5 {
            format!(
                "{}%{}:{:02}:{:02}:{}:{:02}",
                self.lemma, self.ss_type, self.lex_filenum, self.lex_id, self.head_word, self.head_id
            )
        } else {
            format!(
                "{}%{}:{:02}:{:02}::",
                self.lemma, self.ss_type, self.lex_filenum, self.lex_id
            )
        }
    }
}

fn parse_digits(text: &str, width: usize) -> Option<u8> {
    if text.len() != width || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

impl fmt::Display for SenseKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl std::str::FromStr for SenseKey {
    type Err = WordNetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SenseKey::parse(s)
    }
}

impl Serialize for SenseKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for SenseKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        SenseKey::parse(&text).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_verb_key_with_nonzero_lex_id() {
        let key = SenseKey::parse("say%2:32:15::").unwrap();
        assert_eq!(key.lemma(), "say");
        assert_eq!(key.ss_type(), 2);
        assert_eq!(key.lex_filenum(), 32);
        assert_eq!(key.lex_id(), 15);
        assert_eq!(key.head_word(), "");
        assert_eq!(key.pos(), PartOfSpeech::Verb);
    }

    #[test]
    fn parses_verb_key_with_zero_lex_id() {
        let key = SenseKey::parse("say%2:32:00::").unwrap();
        assert_eq!(key.lemma(), "say");
        assert_eq!(key.ss_type(), 2);
        assert_eq!(key.lex_filenum(), 32);
        assert_eq!(key.lex_id(), 0);
    }

    #[test]
    fn rejects_ss_type_out_of_range() {
        let err = SenseKey::parse("say%9:32:00::").unwrap_err();
        assert!(matches!(err, WordNetError::SsTypeOutOfRange { ss_type: 9, .. }));
    }

    #[test]
    fn parses_satellite_key_with_head_fields() {
        let key = SenseKey::parse("capable%5:00:00:able:00").unwrap();
        assert_eq!(key.ss_type(), 5);
        assert_eq!(key.head_word(), "able");
        assert_eq!(key.head_id(), 0);
        assert_eq!(key.pos(), PartOfSpeech::AdjectiveSatellite);
    }

    #[test]
    fn rejects_head_word_on_non_satellite() {
        assert!(SenseKey::parse("say%2:32:00:able:00").is_err());
    }

    #[test]
    fn rejects_satellite_without_head_word() {
        assert!(SenseKey::parse("capable%5:00:00::").is_err());
    }

    #[test]
    fn rejects_structural_garbage() {
        for bad in ["", "say", "say%", "say%2:32:00:", "say%2:32:00:::", "say%x:32:00::",
                    "say%2:3:00::", "say%2:32:0::", "Say%2:32:00::", "say%2:32:16::"] {
            assert!(SenseKey::parse(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn round_trips_byte_for_byte() {
        for raw in ["say%2:32:15::", "say%1:10:04::", "capable%5:00:00:able:00",
                    "take_off%2:38:00::", "o'clock%4:02:00::"] {
            let key = SenseKey::parse(raw).unwrap();
            assert_eq!(key.format_fields(), raw);
            assert_eq!(key.to_string(), raw);
        }
    }

    #[test]
    fn multiword_lemma_keeps_underscores() {
        let key = SenseKey::parse("take_off%2:38:00::").unwrap();
        assert_eq!(key.lemma(), "take_off");
    }
}
