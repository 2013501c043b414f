//! Coarse-grained sense group construction.
//!
//! Pipeline stage three: take every same-PoS (dictionary sense, WordNet
//! sense) pair for the target words, have the judge rate each pair, and turn
//! the matches into sense groups — one group per dictionary sense, its
//! members being the WordNet senses that matched it. A class-based inventory
//! (CSI-style label mapping) can be projected onto the same in-memory shape,
//! so downstream evaluation code never cares where an inventory came from.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::judge::{Judge, JudgeError, MatchJudgment, MatchQuery};
use crate::lexicon::{CEFRLevel, Dictionary, DictionarySense, VocabularyList};
use crate::util::atomic_write;
use crate::wordnet::{PartOfSpeech, SenseKey, WordNetDatabase, WordNetSense};

/// Errors from matching orchestration and inventory persistence.
#[derive(Debug, Error)]
pub enum GrouperError {
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(
        "INVALID judgments exceed the ceiling: {invalid}/{total} = {rate:.3} > {ceiling}",
        rate = *invalid as f64 / *total as f64
    )]
    InvalidCeilingExceeded {
        invalid: usize,
        total: usize,
        ceiling: f64,
    },
    #[error("{path}:{line}: {reason}")]
    BadLine {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}: unsupported inventory schema version {found:?} (expected \"1\")")]
    SchemaVersion { path: PathBuf, found: String },
    #[error("{path}: checksum mismatch — file does not match its metadata record")]
    ChecksumMismatch { path: PathBuf },
    #[error("invalid inventory: {reason}")]
    BadInventory { reason: String },
    #[error("coverage undefined: the target words have no WordNet senses")]
    CoverageUndefined,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One judged candidate pair, with enough identity to audit group membership
/// back to the judgment log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairJudgment {
    pub dictionary_id: String,
    pub dict_sense_id: String,
    pub sense_key: SenseKey,
    pub pos: PartOfSpeech,
    pub cefr: Option<CEFRLevel>,
    pub judgment: MatchJudgment,
}

/// One coarse-grained sense: a dictionary sense (the anchor) plus the
/// WordNet senses judged to match it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SenseGroup {
    pub group_id: String,
    pub word: String,
    pub pos: PartOfSpeech,
    pub anchor_dictionary_id: String,
    pub anchor_sense_id: String,
    pub anchor_definition: String,
    pub members: BTreeSet<SenseKey>,
    pub cefr: Option<CEFRLevel>,
}

impl SenseGroup {
    /// Check the structural invariants: members non-empty, every member's
    /// lemma equals the group word, and every member's PoS agrees with the
    /// group PoS on the broad class.
    pub fn validate(&self) -> Result<(), String> {
        if self.members.is_empty() {
            return Err(format!("group {} has no members", self.group_id));
        }
        for key in &self.members {
            if key.lemma() != self.word {
                return Err(format!(
                    "group {} (word {:?}) contains key {} of a different lemma",
                    self.group_id,
                    self.word,
                    key.raw()
                ));
            }
            if !key.pos().same_broad(self.pos) {
                return Err(format!(
                    "group {} ({}) contains key {} of a different part of speech",
                    self.group_id,
                    self.pos,
                    key.raw()
                ));
            }
        }
        Ok(())
    }

    pub fn contains(&self, key: &SenseKey) -> bool {
        self.members.contains(key)
    }
}

/// How an inventory was built; recorded in metadata for every build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreationParams {
    /// Highest scale value still counted as a match (0 for projected
    /// inventories, where no scale judging happened).
    pub match_threshold: u8,
    pub min_group_size: usize,
    /// Digest of the judge configuration, empty for projected inventories.
    pub judge_config_digest: String,
}

/// A coarse-grained sense inventory: groups plus their provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inventory {
    pub inventory_id: String,
    pub source_dictionary: String,
    pub wordnet_version: String,
    pub creation_params: CreationParams,
    /// Sorted by `group_id`; ids are unique.
    pub groups: Vec<SenseGroup>,
}

impl Inventory {
    /// Check group uniqueness, ordering, and per-group invariants.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for group in &self.groups {
            group.validate()?;
            if !seen.insert(&group.group_id) {
                return Err(format!("duplicate group id {}", group.group_id));
            }
        }
        Ok(())
    }

    /// Map each member sense key to the indices of the groups holding it.
    pub fn membership_index(&self) -> HashMap<&str, Vec<usize>> {
        let mut index: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, group) in self.groups.iter().enumerate() {
            for key in &group.members {
                index.entry(key.raw()).or_default().push(i);
            }
        }
        index
    }

    /// Number of sense keys that belong to more than one group.
    pub fn member_overlap_count(&self) -> usize {
        self.membership_index()
            .values()
            .filter(|groups| groups.len() > 1)
            .count()
    }

    /// True when the two keys share at least one group.
    pub fn co_grouped(&self, a: &SenseKey, b: &SenseKey) -> bool {
        self.groups
            .iter()
            .any(|g| g.contains(a) && g.contains(b))
    }
}

/// Inventory size and how much of WordNet it covers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    pub group_count: usize,
    pub covered_sense_keys: usize,
    pub total_sense_keys: usize,
    pub coverage_rate: f64,
}

/// All same-PoS (dictionary sense, WordNet sense) pairs for one word, in
/// deterministic order: dictionary sense id, then sense key.
///
/// PoS equality is on the broad class, so adjective satellites pair with
/// dictionary adjective senses.
pub fn generate_candidates<'a>(
    word: &str,
    wn_senses: &[&'a WordNetSense],
    dict_senses: &[&'a DictionarySense],
) -> Vec<(&'a DictionarySense, &'a WordNetSense)> {
    debug_assert!(wn_senses.iter().all(|s| s.lemma == word.to_lowercase()));
    debug_assert!(dict_senses
        .iter()
        .all(|d| d.headword.eq_ignore_ascii_case(word)));
    let mut pairs: Vec<(&DictionarySense, &WordNetSense)> = Vec::new();
    for dict_sense in dict_senses {
        for wn_sense in wn_senses {
            if dict_sense.pos.same_broad(wn_sense.pos) {
                pairs.push((dict_sense, wn_sense));
            }
        }
    }
    pairs.sort_by(|(da, wa), (db, wb)| {
        (&da.sense_id, wa.key.raw()).cmp(&(&db.sense_id, wb.key.raw()))
    });
    pairs
}

/// Knobs for [`run_matching`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchingOptions {
    /// Abort when the INVALID fraction of all judgments exceeds this.
    pub invalid_ceiling: f64,
}

impl Default for MatchingOptions {
    fn default() -> Self {
        MatchingOptions {
            invalid_ceiling: 0.05,
        }
    }
}

/// Judge every candidate pair for every target word.
///
/// Produces exactly one judgment per pair, in deterministic order (word,
/// PoS, dictionary sense id, sense key) regardless of judging concurrency.
/// Individual INVALID judgments are tolerated and reported; the run aborts
/// only when their fraction exceeds `options.invalid_ceiling`.
pub fn run_matching(
    words: &VocabularyList,
    db: &WordNetDatabase,
    dict: &Dictionary,
    judge: &Judge,
    options: MatchingOptions,
) -> Result<Vec<PairJudgment>, GrouperError> {
    let mut queries: Vec<MatchQuery> = Vec::new();
    let mut meta: Vec<(&DictionarySense, &WordNetSense, PartOfSpeech)> = Vec::new();
    for word in &words.lemmas {
        for pos in [
            PartOfSpeech::Noun,
            PartOfSpeech::Verb,
            PartOfSpeech::Adjective,
            PartOfSpeech::Adverb,
        ] {
            let dict_senses = dict.senses_for(word, pos);
            if dict_senses.is_empty() {
                continue;
            }
            let wn_senses = db.lookup_senses_broad(word, pos);
            if wn_senses.is_empty() {
                continue;
            }
            for (dict_sense, wn_sense) in generate_candidates(word, &wn_senses, &dict_senses) {
                queries.push(MatchQuery {
                    word: word.clone(),
                    dict_definition: dict_sense.definition.clone(),
                    wordnet_definition: wn_sense.definition.clone(),
                });
                meta.push((dict_sense, wn_sense, pos));
            }
        }
    }

    let judgments = judge.judge_match_batch(&queries)?;
    let total = judgments.len();
    let invalid = judgments.iter().filter(|j| j.is_invalid()).count();
    log::info!("matching: {total} pairs judged, {invalid} INVALID");
    if total > 0 {
        let rate = invalid as f64 / total as f64;
        if rate > options.invalid_ceiling {
            return Err(GrouperError::InvalidCeilingExceeded {
                invalid,
                total,
                ceiling: options.invalid_ceiling,
            });
        }
    }

    Ok(meta
        .into_iter()
        .zip(judgments)
        .map(|((dict_sense, wn_sense, pos), judgment)| PairJudgment {
            dictionary_id: dict_sense.dictionary_id.clone(),
            dict_sense_id: dict_sense.sense_id.clone(),
            sense_key: wn_sense.key.clone(),
            pos,
            cefr: dict_sense.cefr,
            judgment,
        })
        .collect())
}

/// Provenance and thresholds for [`build_groups`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    pub inventory_id: String,
    pub source_dictionary: String,
    pub wordnet_version: String,
    /// Scale values ≤ this count as a match.
    pub match_threshold: u8,
    /// Groups with fewer members are dropped.
    pub min_group_size: usize,
    pub judge_config_digest: String,
}

impl BuildParams {
    pub fn new(inventory_id: &str, source_dictionary: &str) -> BuildParams {
        BuildParams {
            inventory_id: inventory_id.to_string(),
            source_dictionary: source_dictionary.to_string(),
            wordnet_version: "3.0".to_string(),
            match_threshold: 2,
            min_group_size: 2,
            judge_config_digest: String::new(),
        }
    }
}

/// Group matched WordNet senses under their dictionary senses.
///
/// A pair is a match when its scale is ≤ `match_threshold`; INVALID
/// judgments never match. One group per dictionary sense with at least
/// `min_group_size` members; the group inherits the dictionary sense's CEFR
/// level when present. The result is invariant under permutation of
/// `judgments`.
pub fn build_groups(judgments: &[PairJudgment], params: &BuildParams) -> Inventory {
    // Anchor identity and accumulated members, keyed for determinism.
    struct Anchor<'a> {
        judgment: &'a PairJudgment,
        members: BTreeSet<SenseKey>,
    }
    let mut anchors: BTreeMap<(String, String), Anchor> = BTreeMap::new();
    for pair in judgments {
        let anchor = anchors
            .entry((pair.dictionary_id.clone(), pair.dict_sense_id.clone()))
            .or_insert(Anchor {
                judgment: pair,
                members: BTreeSet::new(),
            });
        let matched = pair
            .judgment
            .scale
            .is_some_and(|s| s.value() <= params.match_threshold);
        if matched {
            anchor.members.insert(pair.sense_key.clone());
        }
    }

    let mut groups = Vec::new();
    for ((dictionary_id, dict_sense_id), anchor) in anchors {
        if anchor.members.len() < params.min_group_size {
            continue;
        }
        groups.push(SenseGroup {
            group_id: format!("{dictionary_id}:{dict_sense_id}"),
            word: anchor.judgment.judgment.query.word.clone(),
            pos: anchor.judgment.pos,
            anchor_dictionary_id: dictionary_id,
            anchor_sense_id: dict_sense_id,
            anchor_definition: anchor.judgment.judgment.query.dict_definition.clone(),
            members: anchor.members,
            cefr: anchor.judgment.cefr,
        });
    }
    groups.sort_by(|a, b| a.group_id.cmp(&b.group_id));

    let inventory = Inventory {
        inventory_id: params.inventory_id.clone(),
        source_dictionary: params.source_dictionary.clone(),
        wordnet_version: params.wordnet_version.clone(),
        creation_params: CreationParams {
            match_threshold: params.match_threshold,
            min_group_size: params.min_group_size,
            judge_config_digest: params.judge_config_digest.clone(),
        },
        groups,
    };
    log::info!(
        "built inventory {}: {} groups, {} overlapping sense keys",
        inventory.inventory_id,
        inventory.groups.len(),
        inventory.member_overlap_count()
    );
    inventory
}

/// Provenance for [`project_class_inventory`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    pub inventory_id: String,
    pub wordnet_version: String,
    /// Projected groups keep singletons by default.
    pub min_group_size: usize,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        ProjectionParams {
            inventory_id: "csi".to_string(),
            wordnet_version: "3.0".to_string(),
            min_group_size: 1,
        }
    }
}

/// Project a class-label mapping (CSI-style) onto the inventory shape.
///
/// The mapping file assigns labels to sense keys or synset ids; for each
/// (word, PoS, label), the labeled senses of that word form one group.
/// Senses of words outside `words` are excluded; identifiers that resolve to
/// nothing are logged and skipped.
pub fn project_class_inventory(
    mapping_path: impl AsRef<Path>,
    words: &VocabularyList,
    db: &WordNetDatabase,
    params: &ProjectionParams,
) -> Result<Inventory, GrouperError> {
    let mapping_path = mapping_path.as_ref();
    let text = fs::read_to_string(mapping_path).map_err(|source| GrouperError::Io {
        path: mapping_path.to_path_buf(),
        source,
    })?;

    let mut buckets: BTreeMap<(String, PartOfSpeech, String), BTreeSet<SenseKey>> =
        BTreeMap::new();
    let mut unknown = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, label_list) = line.split_once('\t').ok_or_else(|| GrouperError::BadLine {
            path: mapping_path.to_path_buf(),
            line: lineno + 1,
            reason: "expected `id<TAB>label[,label...]`".to_string(),
        })?;
        let labels: Vec<&str> = label_list
            .split(',')
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        if labels.is_empty() {
            return Err(GrouperError::BadLine {
                path: mapping_path.to_path_buf(),
                line: lineno + 1,
                reason: "no labels".to_string(),
            });
        }

        let senses = resolve_mapping_id(id.trim(), db);
        if senses.is_empty() {
            log::warn!(
                "{}:{}: unknown sense identifier {:?}, skipped",
                mapping_path.display(),
                lineno + 1,
                id
            );
            unknown += 1;
            continue;
        }
        for sense in senses {
            if !words.contains(&sense.lemma) {
                continue;
            }
            for label in &labels {
                buckets
                    .entry((sense.lemma.clone(), sense.pos.broad(), label.to_string()))
                    .or_default()
                    .insert(sense.key.clone());
            }
        }
    }
    if unknown > 0 {
        log::warn!("{unknown} mapping identifiers could not be resolved");
    }

    let mut groups = Vec::new();
    for ((word, pos, label), members) in buckets {
        if members.len() < params.min_group_size {
            continue;
        }
        groups.push(SenseGroup {
            group_id: format!("csi:{label}:{word}:{pos}"),
            word,
            pos,
            anchor_dictionary_id: "CSI".to_string(),
            anchor_sense_id: label.clone(),
            anchor_definition: label,
            members,
            cefr: None,
        });
    }
    groups.sort_by(|a, b| a.group_id.cmp(&b.group_id));

    Ok(Inventory {
        inventory_id: params.inventory_id.clone(),
        source_dictionary: "CSI".to_string(),
        wordnet_version: params.wordnet_version.clone(),
        creation_params: CreationParams {
            match_threshold: 0,
            min_group_size: params.min_group_size,
            judge_config_digest: String::new(),
        },
        groups,
    })
}

/// Resolve a mapping identifier to senses: either a sense key
/// (`say%2:32:00::`) or a synset id (`01009240-v`).
fn resolve_mapping_id<'a>(id: &str, db: &'a WordNetDatabase) -> Vec<&'a WordNetSense> {
    if id.contains('%') {
        return db.sense_by_key(id).into_iter().collect();
    }
    let Some((offset_text, pos_text)) = id.split_once('-') else {
        return Vec::new();
    };
    let Ok(offset) = offset_text.parse::<u32>() else {
        return Vec::new();
    };
    let Some(pos) = pos_text
        .chars()
        .next()
        .and_then(PartOfSpeech::from_data_char)
    else {
        return Vec::new();
    };
    db.senses_of_synset(pos, offset)
}

/// Inventory size and coverage of the target words' WordNet senses.
pub fn coverage_stats(
    inv: &Inventory,
    db: &WordNetDatabase,
    words: &VocabularyList,
) -> Result<CoverageStats, GrouperError> {
    let mut total: BTreeSet<&str> = BTreeSet::new();
    for word in &words.lemmas {
        for pos in PartOfSpeech::ALL {
            for sense in db.lookup_senses(word, pos) {
                total.insert(sense.key.raw());
            }
        }
    }
    if total.is_empty() {
        return Err(GrouperError::CoverageUndefined);
    }
    let covered: BTreeSet<&str> = inv
        .groups
        .iter()
        .flat_map(|g| g.members.iter().map(|k| k.raw()))
        .collect();
    Ok(CoverageStats {
        group_count: inv.groups.len(),
        covered_sense_keys: covered.len(),
        total_sense_keys: total.len(),
        coverage_rate: covered.len() as f64 / total.len() as f64,
    })
}

pub const INVENTORY_SCHEMA_VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
struct InventoryMetadata {
    schema_version: String,
    inventory_id: String,
    source_dictionary: String,
    wordnet_version: String,
    creation_params: CreationParams,
    group_count: usize,
    /// SHA-256 of the group lines that follow the metadata line.
    checksum: String,
}

fn group_body(inv: &Inventory) -> String {
    let mut body = String::new();
    for group in &inv.groups {
        body.push_str(&serde_json::to_string(group).expect("group serializes"));
        body.push('\n');
    }
    body
}

fn body_checksum(body: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(body.as_bytes());
    hex::encode(hasher.finalize())
}

/// Write an inventory atomically: one metadata line, then one line per group.
pub fn persist_inventory(inv: &Inventory, path: impl AsRef<Path>) -> Result<(), GrouperError> {
    let path = path.as_ref();
    inv.validate()
        .map_err(|reason| GrouperError::BadInventory { reason })?;
    let body = group_body(inv);
    let metadata = InventoryMetadata {
        schema_version: INVENTORY_SCHEMA_VERSION.to_string(),
        inventory_id: inv.inventory_id.clone(),
        source_dictionary: inv.source_dictionary.clone(),
        wordnet_version: inv.wordnet_version.clone(),
        creation_params: inv.creation_params.clone(),
        group_count: inv.groups.len(),
        checksum: body_checksum(&body),
    };
    let mut contents = serde_json::to_string(&metadata).expect("metadata serializes");
    contents.push('\n');
    contents.push_str(&body);
    atomic_write(path, contents.as_bytes()).map_err(|source| GrouperError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load a persisted inventory, verifying schema version, checksum, and
/// structural invariants.
pub fn load_inventory(path: impl AsRef<Path>) -> Result<Inventory, GrouperError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| GrouperError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (meta_line, body) = text.split_once('\n').ok_or_else(|| GrouperError::BadLine {
        path: path.to_path_buf(),
        line: 1,
        reason: "missing metadata line".to_string(),
    })?;
    let metadata: InventoryMetadata =
        serde_json::from_str(meta_line).map_err(|e| GrouperError::BadLine {
            path: path.to_path_buf(),
            line: 1,
            reason: e.to_string(),
        })?;
    if metadata.schema_version != INVENTORY_SCHEMA_VERSION {
        return Err(GrouperError::SchemaVersion {
            path: path.to_path_buf(),
            found: metadata.schema_version,
        });
    }
    if body_checksum(body) != metadata.checksum {
        return Err(GrouperError::ChecksumMismatch {
            path: path.to_path_buf(),
        });
    }

    let mut groups = Vec::new();
    for (lineno, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let group: SenseGroup = serde_json::from_str(line).map_err(|e| GrouperError::BadLine {
            path: path.to_path_buf(),
            line: lineno + 2,
            reason: e.to_string(),
        })?;
        groups.push(group);
    }
    if groups.len() != metadata.group_count {
        return Err(GrouperError::BadInventory {
            reason: format!(
                "metadata promises {} groups, file has {}",
                metadata.group_count,
                groups.len()
            ),
        });
    }

    let inventory = Inventory {
        inventory_id: metadata.inventory_id,
        source_dictionary: metadata.source_dictionary,
        wordnet_version: metadata.wordnet_version,
        creation_params: metadata.creation_params,
        groups,
    };
    inventory
        .validate()
        .map_err(|reason| GrouperError::BadInventory { reason })?;
    Ok(inventory)
}
