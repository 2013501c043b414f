//! Learner's-dictionary ingestion and vocabulary word lists.
//!
//! Proprietary dictionary content cannot ship with the repository, so senses
//! arrive through a line-delimited JSON interchange file that users export
//! from their own licensed data. Definition text is kept verbatim — prompts
//! must render it untouched — while headwords match case-insensitively.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wordnet::PartOfSpeech;

/// Errors from dictionary and vocabulary loading.
#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{path}:{line}: {reason}")]
    BadRecord {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: duplicate sense id {dictionary_id}/{sense_id}")]
    DuplicateSenseId {
        path: PathBuf,
        line: usize,
        dictionary_id: String,
        sense_id: String,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// CEFR proficiency levels, ordered from beginner to mastery.
#[derive(
    Clone, Copy, Debug, Eq, PartialEq, Ord, PartialOrd, Hash, Serialize, Deserialize,
)]
pub enum CEFRLevel {
    A1,
    A2,
    B1,
    B2,
    C1,
    C2,
}

impl fmt::Display for CEFRLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CEFRLevel::A1 => "A1",
            CEFRLevel::A2 => "A2",
            CEFRLevel::B1 => "B1",
            CEFRLevel::B2 => "B2",
            CEFRLevel::C1 => "C1",
            CEFRLevel::C2 => "C2",
        })
    }
}

impl std::str::FromStr for CEFRLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A1" => Ok(CEFRLevel::A1),
            "A2" => Ok(CEFRLevel::A2),
            "B1" => Ok(CEFRLevel::B1),
            "B2" => Ok(CEFRLevel::B2),
            "C1" => Ok(CEFRLevel::C1),
            "C2" => Ok(CEFRLevel::C2),
            other => Err(format!("unknown CEFR level {other:?}")),
        }
    }
}

/// One sense of a dictionary headword.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DictionarySense {
    pub dictionary_id: String,
    pub headword: String,
    #[serde(
        serialize_with = "serialize_dict_pos",
        deserialize_with = "deserialize_dict_pos"
    )]
    pub pos: PartOfSpeech,
    /// Unique within the dictionary, e.g. `say.v.1`.
    pub sense_id: String,
    pub definition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cefr: Option<CEFRLevel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guideword: Option<String>,
}

/// Dictionary records only carry the four broad classes.
fn serialize_dict_pos<S: serde::Serializer>(
    pos: &PartOfSpeech,
    ser: S,
) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&pos.broad().to_string())
}

fn deserialize_dict_pos<'de, D: serde::Deserializer<'de>>(
    de: D,
) -> Result<PartOfSpeech, D::Error> {
    let tag = String::deserialize(de)?;
    match tag.as_str() {
        "noun" => Ok(PartOfSpeech::Noun),
        "verb" => Ok(PartOfSpeech::Verb),
        "adjective" => Ok(PartOfSpeech::Adjective),
        "adverb" => Ok(PartOfSpeech::Adverb),
        other => Err(serde::de::Error::custom(format!(
            "unknown pos tag {other:?} (expected noun, verb, adjective, or adverb)"
        ))),
    }
}

/// An in-memory dictionary: validated records plus a `(headword, pos)` index.
///
/// Immutable after load; concurrent reads are safe.
#[derive(Debug, PartialEq)]
pub struct Dictionary {
    records: Vec<DictionarySense>,
    by_headword_pos: BTreeMap<(String, PartOfSpeech), Vec<usize>>,
}

impl Dictionary {
    /// Build a dictionary from already-parsed records, enforcing invariants.
    pub fn from_records(records: Vec<DictionarySense>) -> Result<Dictionary, String> {
        let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
        for record in &records {
            if record.definition.trim().is_empty() {
                return Err(format!(
                    "sense {} has an empty definition",
                    record.sense_id
                ));
            }
            if !seen.insert((record.dictionary_id.clone(), record.sense_id.clone())) {
                return Err(format!(
                    "duplicate sense id {}/{}",
                    record.dictionary_id, record.sense_id
                ));
            }
        }
        let mut by_headword_pos: BTreeMap<(String, PartOfSpeech), Vec<usize>> = BTreeMap::new();
        for (i, record) in records.iter().enumerate() {
            by_headword_pos
                .entry((record.headword.to_lowercase(), record.pos))
                .or_default()
                .push(i);
        }
        for bucket in by_headword_pos.values_mut() {
            bucket.sort_by(|&a, &b| records[a].sense_id.cmp(&records[b].sense_id));
        }
        Ok(Dictionary {
            records,
            by_headword_pos,
        })
    }

    /// All records in file order.
    pub fn records(&self) -> &[DictionarySense] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Find a record by its sense id (searching all dictionary ids).
    pub fn sense_by_id(&self, sense_id: &str) -> Option<&DictionarySense> {
        self.records.iter().find(|r| r.sense_id == sense_id)
    }

    /// All senses of `(headword, pos)`, stable-ordered by sense id.
    ///
    /// Headwords match case-insensitively; `pos` is compared on the broad
    /// class, so asking for adjective satellites finds adjective entries.
    pub fn senses_for(&self, headword: &str, pos: PartOfSpeech) -> Vec<&DictionarySense> {
        self.by_headword_pos
            .get(&(headword.to_lowercase(), pos.broad()))
            .map(|idxs| idxs.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    /// Distinct lowercased headwords, sorted.
    pub fn headwords(&self) -> BTreeSet<String> {
        self.records
            .iter()
            .map(|r| r.headword.to_lowercase())
            .collect()
    }

    /// Serialize back to interchange lines in original record order.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Free-function form of [`Dictionary::senses_for`].
pub fn dict_senses_for<'a>(
    dict: &'a Dictionary,
    headword: &str,
    pos: PartOfSpeech,
) -> Vec<&'a DictionarySense> {
    dict.senses_for(headword, pos)
}

/// Load a line-delimited JSON dictionary interchange file.
pub fn load_dictionary(path: impl AsRef<Path>) -> Result<Dictionary, LexiconError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })?;

    let mut records = Vec::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: DictionarySense =
            serde_json::from_str(line).map_err(|e| LexiconError::BadRecord {
                path: path.to_path_buf(),
                line: lineno,
                reason: e.to_string(),
            })?;
        if record.definition.trim().is_empty() {
            return Err(LexiconError::BadRecord {
                path: path.to_path_buf(),
                line: lineno,
                reason: "empty definition".to_string(),
            });
        }
        if !seen.insert((record.dictionary_id.clone(), record.sense_id.clone())) {
            return Err(LexiconError::DuplicateSenseId {
                path: path.to_path_buf(),
                line: lineno,
                dictionary_id: record.dictionary_id,
                sense_id: record.sense_id,
            });
        }
        records.push(record);
    }

    let dict = Dictionary::from_records(records).expect("invariants already checked");
    log::info!(
        "loaded dictionary from {}: {} records",
        path.display(),
        dict.len()
    );
    Ok(dict)
}

/// A named set of lowercase lemmas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VocabularyList {
    pub name: String,
    pub lemmas: BTreeSet<String>,
}

impl VocabularyList {
    pub fn contains(&self, lemma: &str) -> bool {
        self.lemmas.contains(&lemma.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }
}

/// Load a plain-text vocabulary list: one lemma per line, lowercased and
/// deduplicated; `#`-prefixed lines are comments.
pub fn load_vocabulary(path: impl AsRef<Path>) -> Result<VocabularyList, LexiconError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })?;

    let mut lemmas = BTreeSet::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        lemmas.insert(line.to_lowercase());
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "vocabulary".to_string());
    if lemmas.is_empty() {
        log::warn!("vocabulary list {} is empty", path.display());
    } else {
        log::info!(
            "loaded vocabulary list {} from {}: {} lemmas",
            name,
            path.display(),
            lemmas.len()
        );
    }
    Ok(VocabularyList { name, lemmas })
}
