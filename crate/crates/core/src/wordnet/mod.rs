//! WordNet database loading and sense lookup.
//!
//! Reads the plain-text WNDB files of a WordNet installation: `index.sense`
//! enumerates every sense key with its synset offset, and `data.{noun,verb,
//! adj,adv}` hold the synsets with their glosses. The loaded database is
//! immutable and indexes senses by `(lemma, pos)` and by raw sense key.

mod sense_key;

pub use sense_key::SenseKey;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from sense-key parsing and database loading.
#[derive(Debug, Error)]
pub enum WordNetError {
    #[error("malformed sense key {key:?}: {reason}")]
    MalformedSenseKey { key: String, reason: String },
    #[error("sense key {key:?}: ss_type {ss_type} outside 1..5")]
    SsTypeOutOfRange { key: String, ss_type: u8 },
    #[error("missing required WordNet file: {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: {reason}")]
    BadLine {
        file: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("duplicate sense key {key:?} ({file}:{line})")]
    DuplicateSenseKey {
        key: String,
        file: PathBuf,
        line: usize,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// The five synset types WordNet distinguishes.
///
/// The mapping to sense-key `ss_type` digits is bijective: noun=1, verb=2,
/// adjective=3, adverb=4, adjective satellite=5.
#[derive(Clone, Copy, Debug, Eq, PartialEq, Ord, PartialOrd, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartOfSpeech {
    Noun,
    Verb,
    Adjective,
    AdjectiveSatellite,
    Adverb,
}

impl PartOfSpeech {
    /// All five values in ss_type order.
    pub const ALL: [PartOfSpeech; 5] = [
        PartOfSpeech::Noun,
        PartOfSpeech::Verb,
        PartOfSpeech::Adjective,
        PartOfSpeech::Adverb,
        PartOfSpeech::AdjectiveSatellite,
    ];

    /// Decode a sense-key ss_type digit.
    pub fn from_ss_type(digit: u8) -> Option<PartOfSpeech> {
        match digit {
            1 => Some(PartOfSpeech::Noun),
            2 => Some(PartOfSpeech::Verb),
            3 => Some(PartOfSpeech::Adjective),
            4 => Some(PartOfSpeech::Adverb),
            5 => Some(PartOfSpeech::AdjectiveSatellite),
            _ => None,
        }
    }

    /// The sense-key ss_type digit for this value.
    pub fn ss_type(self) -> u8 {
        match self {
            PartOfSpeech::Noun => 1,
            PartOfSpeech::Verb => 2,
            PartOfSpeech::Adjective => 3,
            PartOfSpeech::Adverb => 4,
            PartOfSpeech::AdjectiveSatellite => 5,
        }
    }

    /// Decode the single-character marker used in `data.*` files.
    pub fn from_data_char(c: char) -> Option<PartOfSpeech> {
        match c {
            'n' => Some(PartOfSpeech::Noun),
            'v' => Some(PartOfSpeech::Verb),
            'a' => Some(PartOfSpeech::Adjective),
            's' => Some(PartOfSpeech::AdjectiveSatellite),
            'r' => Some(PartOfSpeech::Adverb),
            _ => None,
        }
    }

    /// Collapse the satellite subtype into plain adjective.
    ///
    /// Dictionary entries and sense groups only distinguish the four broad
    /// classes, so same-PoS comparisons go through this mapping.
    pub fn broad(self) -> PartOfSpeech {
        match self {
            PartOfSpeech::AdjectiveSatellite => PartOfSpeech::Adjective,
            other => other,
        }
    }

    /// True when both values denote the same broad class.
    pub fn same_broad(self, other: PartOfSpeech) -> bool {
        self.broad() == other.broad()
    }

    fn data_file(self) -> &'static str {
        match self {
            PartOfSpeech::Noun => "data.noun",
            PartOfSpeech::Verb => "data.verb",
            PartOfSpeech::Adjective | PartOfSpeech::AdjectiveSatellite => "data.adj",
            PartOfSpeech::Adverb => "data.adv",
        }
    }
}

impl fmt::Display for PartOfSpeech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adjective => "adjective",
            PartOfSpeech::AdjectiveSatellite => "adjective_satellite",
            PartOfSpeech::Adverb => "adverb",
        })
    }
}

impl std::str::FromStr for PartOfSpeech {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "noun" => Ok(PartOfSpeech::Noun),
            "verb" => Ok(PartOfSpeech::Verb),
            "adjective" => Ok(PartOfSpeech::Adjective),
            "adjective_satellite" => Ok(PartOfSpeech::AdjectiveSatellite),
            "adverb" => Ok(PartOfSpeech::Adverb),
            other => Err(format!("unknown part of speech {other:?}")),
        }
    }
}

/// One WordNet sense: a key plus the synset text it points at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordNetSense {
    pub key: SenseKey,
    pub lemma: String,
    pub pos: PartOfSpeech,
    pub synset_offset: u32,
    /// Gloss text before the first quoted example, trimmed.
    pub definition: String,
    /// Interiors of the quoted example sentences that follow the definition.
    pub examples: Vec<String>,
}

/// Whether a load aborts on the first bad line or skips and counts it.
#[derive(Clone, Copy, Debug, Default, Eq, PartialEq)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

/// Counters reported by [`load_wordnet`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub senses: usize,
    pub synsets: usize,
    pub skipped_lines: usize,
}

/// Immutable in-memory WordNet sense database.
///
/// Safe to share across threads once loaded; all lookups are reads.
#[derive(Debug)]
pub struct WordNetDatabase {
    senses: Vec<WordNetSense>,
    by_lemma_pos: BTreeMap<(String, PartOfSpeech), Vec<usize>>,
    by_key: HashMap<String, usize>,
    by_synset: BTreeMap<(PartOfSpeech, u32), Vec<usize>>,
    stats: LoadStats,
}

impl PartialEq for WordNetDatabase {
    fn eq(&self, other: &Self) -> bool {
        self.senses == other.senses
    }
}

impl WordNetDatabase {
    /// All senses in load order (index.sense order).
    pub fn senses(&self) -> &[WordNetSense] {
        &self.senses
    }

    /// Load counters.
    pub fn stats(&self) -> LoadStats {
        self.stats
    }

    /// Look up a sense by its raw key text.
    pub fn sense_by_key(&self, raw: &str) -> Option<&WordNetSense> {
        self.by_key.get(raw).map(|&i| &self.senses[i])
    }

    /// All senses of `(lemma, pos)`, stable-ordered by sense key text.
    ///
    /// The lemma is lowercased before lookup; absence yields an empty list.
    pub fn lookup_senses(&self, lemma: &str, pos: PartOfSpeech) -> Vec<&WordNetSense> {
        let lemma = lemma.to_lowercase();
        self.by_lemma_pos
            .get(&(lemma, pos))
            .map(|idxs| idxs.iter().map(|&i| &self.senses[i]).collect())
            .unwrap_or_default()
    }

    /// Senses of `(lemma, pos)` where adjective satellites count as
    /// adjectives, stable-ordered by sense key text.
    pub fn lookup_senses_broad(&self, lemma: &str, pos: PartOfSpeech) -> Vec<&WordNetSense> {
        let mut out = self.lookup_senses(lemma, pos);
        if pos == PartOfSpeech::Adjective {
            out.extend(self.lookup_senses(lemma, PartOfSpeech::AdjectiveSatellite));
            out.sort_by(|a, b| a.key.raw().cmp(b.key.raw()));
        }
        out
    }

    /// Senses belonging to one synset, in sense-key order.
    pub fn senses_of_synset(&self, pos: PartOfSpeech, offset: u32) -> Vec<&WordNetSense> {
        self.by_synset
            .get(&(pos, offset))
            .map(|idxs| idxs.iter().map(|&i| &self.senses[i]).collect())
            .unwrap_or_default()
    }
}

/// Free-function form of [`WordNetDatabase::lookup_senses`].
pub fn lookup_senses<'a>(
    db: &'a WordNetDatabase,
    lemma: &str,
    pos: PartOfSpeech,
) -> Vec<&'a WordNetSense> {
    db.lookup_senses(lemma, pos)
}

/// Load a WordNet installation directory in strict mode.
pub fn load_wordnet(dir: impl AsRef<Path>) -> Result<WordNetDatabase, WordNetError> {
    load_wordnet_with(dir, ParseMode::Strict)
}

/// Load a WordNet installation directory.
///
/// Requires `index.sense` and the four `data.*` files. Every `index.sense`
/// line yields one [`WordNetSense`] whose definition and examples come from
/// the gloss of the referenced synset.
pub fn load_wordnet_with(
    dir: impl AsRef<Path>,
    mode: ParseMode,
) -> Result<WordNetDatabase, WordNetError> {
    let dir = dir.as_ref();
    let index_path = dir.join("index.sense");
    if !index_path.exists() {
        return Err(WordNetError::MissingFile(index_path));
    }

    let mut stats = LoadStats::default();
    let mut glosses: HashMap<(PartOfSpeech, u32), Gloss> = HashMap::new();
    for pos in [
        PartOfSpeech::Noun,
        PartOfSpeech::Verb,
        PartOfSpeech::Adjective,
        PartOfSpeech::Adverb,
    ] {
        let path = dir.join(pos.data_file());
        if !path.exists() {
            return Err(WordNetError::MissingFile(path));
        }
        load_data_file(&path, mode, &mut glosses, &mut stats)?;
    }
    stats.synsets = glosses.len();

    let mut senses = Vec::new();
    let mut by_key: HashMap<String, usize> = HashMap::new();
    let file = fs::File::open(&index_path).map_err(|source| WordNetError::Io {
        path: index_path.clone(),
        source,
    })?;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| WordNetError::Io {
            path: index_path.clone(),
            source,
        })?;
        let lineno = lineno + 1;
        if line.trim().is_empty() || line.starts_with(' ') {
            continue;
        }
        match parse_index_sense_line(&line, &glosses) {
            Ok(sense) => {
                if by_key.contains_key(sense.key.raw()) {
                    let err = WordNetError::DuplicateSenseKey {
                        key: sense.key.raw().to_string(),
                        file: index_path.clone(),
                        line: lineno,
                    };
                    match mode {
                        ParseMode::Strict => return Err(err),
                        ParseMode::Lenient => {
                            log::warn!("{err}");
                            stats.skipped_lines += 1;
                            continue;
                        }
                    }
                }
                by_key.insert(sense.key.raw().to_string(), senses.len());
                senses.push(sense);
            }
            Err(reason) => {
                let err = WordNetError::BadLine {
                    file: index_path.clone(),
                    line: lineno,
                    reason,
                };
                match mode {
                    ParseMode::Strict => return Err(err),
                    ParseMode::Lenient => {
                        log::warn!("{err}");
                        stats.skipped_lines += 1;
                    }
                }
            }
        }
    }
    stats.senses = senses.len();

    let mut by_lemma_pos: BTreeMap<(String, PartOfSpeech), Vec<usize>> = BTreeMap::new();
    let mut by_synset: BTreeMap<(PartOfSpeech, u32), Vec<usize>> = BTreeMap::new();
    for (i, sense) in senses.iter().enumerate() {
        by_lemma_pos
            .entry((sense.lemma.clone(), sense.pos))
            .or_default()
            .push(i);
        by_synset
            .entry((sense.pos, sense.synset_offset))
            .or_default()
            .push(i);
    }
    for bucket in by_lemma_pos.values_mut().chain(by_synset.values_mut()) {
        bucket.sort_by(|&a, &b| senses[a].key.raw().cmp(senses[b].key.raw()));
    }

    log::info!(
        "loaded WordNet from {}: {} senses, {} synsets, {} skipped lines",
        dir.display(),
        stats.senses,
        stats.synsets,
        stats.skipped_lines
    );

    Ok(WordNetDatabase {
        senses,
        by_lemma_pos,
        by_key,
        by_synset,
        stats,
    })
}

struct Gloss {
    ss_type_char: char,
    definition: String,
    examples: Vec<String>,
}

fn load_data_file(
    path: &Path,
    mode: ParseMode,
    glosses: &mut HashMap<(PartOfSpeech, u32), Gloss>,
    stats: &mut LoadStats,
) -> Result<(), WordNetError> {
    let file = fs::File::open(path).map_err(|source| WordNetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| WordNetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        // License header lines start with two spaces.
        if line.trim().is_empty() || line.starts_with(' ') {
            continue;
        }
        match parse_data_line(&line) {
            Ok((offset, ss_type_char, definition, examples)) => {
                let pos = PartOfSpeech::from_data_char(ss_type_char)
                    .expect("validated in parse_data_line")
                    .broad();
                glosses.insert(
                    (pos, offset),
                    Gloss {
                        ss_type_char,
                        definition,
                        examples,
                    },
                );
            }
            Err(reason) => {
                let err = WordNetError::BadLine {
                    file: path.to_path_buf(),
                    line: lineno + 1,
                    reason,
                };
                match mode {
                    ParseMode::Strict => return Err(err),
                    ParseMode::Lenient => {
                        log::warn!("{err}");
                        stats.skipped_lines += 1;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Parse one `data.*` line: `offset lex_filenum ss_type ... | gloss`.
fn parse_data_line(line: &str) -> Result<(u32, char, String, Vec<String>), String> {
    let (left, gloss) = match line.split_once('|') {
        Some((l, g)) => (l, g),
        None => (line, ""),
    };
    let mut tokens = left.split_ascii_whitespace();
    let offset: u32 = tokens
        .next()
        .ok_or("missing synset_offset")?
        .parse()
        .map_err(|_| "bad synset_offset".to_string())?;
    let _lex_filenum = tokens.next().ok_or("missing lex_filenum")?;
    let ss_type_char = tokens
        .next()
        .and_then(|t| t.chars().next())
        .ok_or("missing ss_type")?;
    if PartOfSpeech::from_data_char(ss_type_char).is_none() {
        return Err(format!("invalid ss_type {ss_type_char:?}"));
    }
    let (definition, examples) = split_gloss(gloss);
    if definition.is_empty() {
        return Err("empty definition in gloss".to_string());
    }
    Ok((offset, ss_type_char, definition, examples))
}

/// Split a gloss into definition text and quoted example sentences.
///
/// The definition is everything before the first `; "` delimiter; the
/// remainder's `"..."` segments become examples. A `;` not followed by a
/// quote stays inside the definition.
pub fn split_gloss(gloss: &str) -> (String, Vec<String>) {
    let gloss = gloss.trim();
    let mut split_at = gloss.len();
    let bytes = gloss.as_bytes();
    for (i, _) in gloss.match_indices(';') {
        let rest = &bytes[i + 1..];
        let next = rest.iter().position(|b| !b.is_ascii_whitespace());
        if let Some(j) = next {
            if rest[j] == b'"' {
                split_at = i;
                break;
            }
        }
    }
    let definition = gloss[..split_at].trim().to_string();
    let mut examples = Vec::new();
    let mut rest = &gloss[split_at..];
    while let Some(open) = rest.find('"') {
        rest = &rest[open + 1..];
        match rest.find('"') {
            Some(close) => {
                let body = &rest[..close];
                if !body.is_empty() {
                    examples.push(body.to_string());
                }
                rest = &rest[close + 1..];
            }
            None => break,
        }
    }
    (definition, examples)
}

/// Parse one `index.sense` line: `sense_key synset_offset sense_number tag_cnt`.
fn parse_index_sense_line(
    line: &str,
    glosses: &HashMap<(PartOfSpeech, u32), Gloss>,
) -> Result<WordNetSense, String> {
    let tokens: Vec<&str> = line.split_ascii_whitespace().collect();
    if tokens.len() != 4 {
        return Err(format!("expected 4 fields, found {}", tokens.len()));
    }
    let key = SenseKey::parse(tokens[0]).map_err(|e| e.to_string())?;
    let offset: u32 = tokens[1]
        .parse()
        .map_err(|_| "bad synset_offset".to_string())?;
    let _sense_number: u32 = tokens[2]
        .parse()
        .map_err(|_| "bad sense_number".to_string())?;
    let _tag_cnt: u32 = tokens[3].parse().map_err(|_| "bad tag_cnt".to_string())?;

    let pos = key.pos();
    let gloss = glosses
        .get(&(pos.broad(), offset))
        .ok_or_else(|| format!("synset {offset:08} not found in {}", pos.data_file()))?;
    let synset_pos = PartOfSpeech::from_data_char(gloss.ss_type_char).expect("validated");
    if synset_pos != pos {
        return Err(format!(
            "sense key pos {pos} does not match synset type {synset_pos} at offset {offset:08}"
        ));
    }

    Ok(WordNetSense {
        lemma: key.lemma().to_string(),
        pos,
        synset_offset: offset,
        definition: gloss.definition.clone(),
        examples: gloss.examples.clone(),
        key,
    })
}
