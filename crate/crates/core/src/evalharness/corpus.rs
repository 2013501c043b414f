//! Sense-tagged corpus loading and sentence marking.
//!
//! Reads the unified WSD-framework corpus layout: an XML file of sentences
//! whose tokens are `<wf>` or `<instance>` elements, plus a gold file mapping
//! instance ids to sense keys. The result is an index from sense key to the
//! tagged sentences containing it, ready for prompt construction.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use quick_xml::escape::resolve_predefined_entity;
use quick_xml::events::Event;
use quick_xml::{Reader, XmlVersion};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::wordnet::SenseKey;

/// One sentence with one annotated target occurrence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub target_index: usize,
    /// The target's surface form; always equals `tokens[target_index]`.
    pub surface: String,
    pub sense_keys: Vec<SenseKey>,
    /// The corpus instance id, e.g. `d000.s000.t000`.
    pub source_id: String,
}

/// Sense key (raw text) → sentences tagged with it.
///
/// A sentence with a multi-key annotation is indexed under each key.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OccurrenceIndex {
    by_key: BTreeMap<String, Vec<TaggedSentence>>,
}

impl OccurrenceIndex {
    /// Sentences tagged with `key`; empty for keys with no occurrences.
    pub fn sentences_for(&self, key: &str) -> &[TaggedSentence] {
        self.by_key.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All indexed keys, sorted.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.by_key.keys().map(String::as_str)
    }

    pub fn key_count(&self) -> usize {
        self.by_key.len()
    }

    pub fn sentence_count(&self) -> usize {
        self.by_key.values().map(Vec::len).sum()
    }
}

/// Load a corpus XML file and its gold key file into an occurrence index.
///
/// Every instance id in the gold file must exist in the corpus; instances
/// without gold keys are ignored.
pub fn load_tagged_corpus(
    data_file: impl AsRef<Path>,
    gold_file: impl AsRef<Path>,
) -> Result<OccurrenceIndex, EvalError> {
    let data_file = data_file.as_ref();
    let gold_file = gold_file.as_ref();

    let gold = load_gold_keys(gold_file)?;
    let xml = fs::read_to_string(data_file).map_err(|source| EvalError::Io {
        path: data_file.to_path_buf(),
        source,
    })?;

    let bad = |reason: String| EvalError::BadCorpus {
        path: data_file.to_path_buf(),
        reason,
    };

    let mut reader = Reader::from_str(&xml);
    let mut index = OccurrenceIndex::default();
    let mut seen: BTreeMap<&str, bool> = gold.keys().map(|id| (id.as_str(), false)).collect();

    let mut tokens: Vec<String> = Vec::new();
    let mut instances: Vec<(String, usize)> = Vec::new();
    let mut in_token = false;
    let mut token_text = String::new();
    let mut pending_instance: Option<String> = None;

    loop {
        let event = reader
            .read_event()
            .map_err(|e| bad(format!("{e} (near byte {})", reader.buffer_position())))?;
        match event {
            Event::Start(e) => match e.name().as_ref() {
                b"sentence" => {
                    tokens.clear();
                    instances.clear();
                }
                b"wf" => {
                    in_token = true;
                    token_text.clear();
                }
                b"instance" => {
                    in_token = true;
                    token_text.clear();
                    let id = e
                        .try_get_attribute("id")
                        .map_err(|e| bad(e.to_string()))?
                        .ok_or_else(|| bad("<instance> without id attribute".to_string()))?;
                    let id = id
                        .normalized_value(XmlVersion::Implicit1_0)
                        .map_err(|e| bad(e.to_string()))?;
                    pending_instance = Some(id.into_owned());
                }
                _ => {}
            },
            Event::Text(t) => {
                if in_token {
                    token_text.push_str(&t.xml10_content().map_err(|e| bad(e.to_string()))?);
                }
            }
            // Entity and character references arrive as their own events.
            Event::GeneralRef(r) => {
                if in_token {
                    if let Some(ch) = r.resolve_char_ref().map_err(|e| bad(e.to_string()))? {
                        token_text.push(ch);
                    } else {
                        let name = r.xml10_content().map_err(|e| bad(e.to_string()))?;
                        let text = resolve_predefined_entity(&name)
                            .ok_or_else(|| bad(format!("unresolvable entity &{name};")))?;
                        token_text.push_str(text);
                    }
                }
            }
            Event::End(e) => match e.name().as_ref() {
                b"wf" | b"instance" => {
                    let text = token_text.trim().to_string();
                    if text.is_empty() {
                        pending_instance = None;
                    } else {
                        if let Some(id) = pending_instance.take() {
                            instances.push((id, tokens.len()));
                        }
                        tokens.push(text);
                    }
                    in_token = false;
                }
                b"sentence" => {
                    for (id, target_index) in instances.drain(..) {
                        let Some(keys) = gold.get(&id) else {
                            log::debug!("instance {id} has no gold keys, skipped");
                            continue;
                        };
                        if let Some(flag) = seen.get_mut(id.as_str()) {
                            *flag = true;
                        }
                        let sentence = TaggedSentence {
                            surface: tokens[target_index].clone(),
                            tokens: tokens.clone(),
                            target_index,
                            sense_keys: keys.clone(),
                            source_id: id,
                        };
                        for key in keys {
                            index
                                .by_key
                                .entry(key.raw().to_string())
                                .or_default()
                                .push(sentence.clone());
                        }
                    }
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }

    if let Some((missing, _)) = seen.iter().find(|(_, &seen)| !seen) {
        return Err(EvalError::GoldInstanceMissing {
            instance_id: missing.to_string(),
        });
    }

    log::info!(
        "loaded corpus {}: {} keys, {} tagged sentences",
        data_file.display(),
        index.key_count(),
        index.sentence_count()
    );
    Ok(index)
}

fn load_gold_keys(path: &Path) -> Result<BTreeMap<String, Vec<SenseKey>>, EvalError> {
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut gold = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let bad = |reason: String| EvalError::BadGoldLine {
            path: path.to_path_buf(),
            line: lineno + 1,
            reason,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let id = fields.next().expect("non-empty line").to_string();
        let keys: Vec<SenseKey> = fields
            .map(|k| SenseKey::parse(k).map_err(|e| bad(e.to_string())))
            .collect::<Result<_, _>>()?;
        if keys.is_empty() {
            return Err(bad("no sense keys".to_string()));
        }
        if gold.insert(id.clone(), keys).is_some() {
            return Err(bad(format!("duplicate instance id {id}")));
        }
    }
    Ok(gold)
}

/// Detokenize a tagged sentence with the target wrapped as `###surface###`.
///
/// Tokens are joined by single spaces, except that no space precedes a token
/// starting with `.`, `,`, `!`, `?`, or `'`, so punctuation reads naturally.
pub fn mark_target(sentence: &TaggedSentence) -> Result<String, EvalError> {
    if sentence.target_index >= sentence.tokens.len() {
        return Err(EvalError::TargetIndexOutOfRange {
            index: sentence.target_index,
            len: sentence.tokens.len(),
        });
    }
    let mut out = String::new();
    for (i, token) in sentence.tokens.iter().enumerate() {
        if i > 0 && !token.starts_with(['.', ',', '!', '?', '\'']) {
            out.push(' ');
        }
        if i == sentence.target_index {
            out.push_str("###");
            out.push_str(token);
            out.push_str("###");
        } else {
            out.push_str(token);
        }
    }
    Ok(out)
}
