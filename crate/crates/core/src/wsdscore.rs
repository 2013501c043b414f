//! Fine- and coarse-grained scoring of WSD predictions.
//!
//! Fine scoring is the usual exact-key accuracy: a prediction is correct
//! when it names one of the instance's gold sense keys. Coarse scoring
//! additionally accepts a prediction that lands in the same sense group as
//! any gold key, measuring how much of the remaining error a coarse
//! inventory absorbs. Coarse accuracy therefore never falls below fine
//! accuracy.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouper::Inventory;
use crate::lexicon::VocabularyList;
use crate::wordnet::{PartOfSpeech, SenseKey};

#[derive(Debug, Error)]
pub enum WsdError {
    #[error("{path} line {line}: {reason}")]
    BadLine {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("prediction for unknown instance id {instance_id}")]
    UnknownInstance { instance_id: String },
    #[error("duplicate prediction for instance id {instance_id}")]
    DuplicatePrediction { instance_id: String },
    #[error("instance {instance_id}: gold keys mix lemmas {first:?} and {second:?}")]
    MixedLemmas {
        instance_id: String,
        first: String,
        second: String,
    },
    #[error("instance {instance_id}: empty gold key list")]
    EmptyGold { instance_id: String },
    #[error("nothing to score: no instances")]
    NoInstances,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One gold-annotated disambiguation target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WsdInstance {
    pub instance_id: String,
    /// Derived from the gold keys, which all share it.
    pub lemma: String,
    pub pos: PartOfSpeech,
    /// Non-empty; a prediction matching any of these is fine-correct.
    pub gold_keys: Vec<SenseKey>,
}

impl WsdInstance {
    /// Build an instance, deriving lemma and PoS from the first gold key.
    pub fn new(instance_id: String, gold_keys: Vec<SenseKey>) -> Result<Self, WsdError> {
        let Some(first) = gold_keys.first() else {
            return Err(WsdError::EmptyGold { instance_id });
        };
        let lemma = first.lemma().to_string();
        let pos = first.pos();
        if let Some(stray) = gold_keys.iter().find(|k| k.lemma() != lemma) {
            return Err(WsdError::MixedLemmas {
                instance_id,
                first: lemma,
                second: stray.lemma().to_string(),
            });
        }
        Ok(WsdInstance {
            instance_id,
            lemma,
            pos,
            gold_keys,
        })
    }
}

/// A system's answer for one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    pub predicted_key: SenseKey,
}

/// Load gold instances and predictions from whitespace-separated key files.
///
/// Gold lines are `instance_id sense_key [sense_key ...]`; prediction lines
/// carry exactly one key. Every prediction must name a gold instance, and an
/// instance may be predicted at most once.
pub fn load_wsd_data(
    gold_file: impl AsRef<Path>,
    pred_file: impl AsRef<Path>,
) -> Result<(Vec<WsdInstance>, Vec<Prediction>), WsdError> {
    let gold_file = gold_file.as_ref();
    let pred_file = pred_file.as_ref();

    let mut instances = Vec::new();
    let mut ids = HashMap::new();
    for (lineno, line) in read_lines(gold_file)?.iter().enumerate() {
        let Some((id, keys)) = parse_key_line(gold_file, lineno + 1, line)? else {
            continue;
        };
        if keys.is_empty() {
            return Err(WsdError::BadLine {
                path: gold_file.to_path_buf(),
                line: lineno + 1,
                reason: format!("instance {id} has no gold keys"),
            });
        }
        if ids.insert(id.clone(), ()).is_some() {
            return Err(WsdError::BadLine {
                path: gold_file.to_path_buf(),
                line: lineno + 1,
                reason: format!("duplicate instance id {id}"),
            });
        }
        instances.push(WsdInstance::new(id, keys)?);
    }

    let mut predictions = Vec::new();
    let mut predicted = HashMap::new();
    for (lineno, line) in read_lines(pred_file)?.iter().enumerate() {
        let Some((id, keys)) = parse_key_line(pred_file, lineno + 1, line)? else {
            continue;
        };
        if keys.len() != 1 {
            return Err(WsdError::BadLine {
                path: pred_file.to_path_buf(),
                line: lineno + 1,
                reason: format!("expected exactly one predicted key, found {}", keys.len()),
            });
        }
        if !ids.contains_key(&id) {
            return Err(WsdError::UnknownInstance { instance_id: id });
        }
        if predicted.insert(id.clone(), ()).is_some() {
            return Err(WsdError::DuplicatePrediction { instance_id: id });
        }
        predictions.push(Prediction {
            instance_id: id,
            predicted_key: keys.into_iter().next().expect("length checked"),
        });
    }

    log::info!(
        "loaded {} instances from {} and {} predictions from {}",
        instances.len(),
        gold_file.display(),
        predictions.len(),
        pred_file.display()
    );
    Ok((instances, predictions))
}

fn read_lines(path: &Path) -> Result<Vec<String>, WsdError> {
    let text = fs::read_to_string(path).map_err(|source| WsdError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text.lines().map(str::to_string).collect())
}

/// Split one `instance_id key...` line; `None` for blank lines.
fn parse_key_line(
    path: &Path,
    lineno: usize,
    line: &str,
) -> Result<Option<(String, Vec<SenseKey>)>, WsdError> {
    if line.trim().is_empty() {
        return Ok(None);
    }
    let mut fields = line.split_whitespace();
    let id = fields.next().expect("non-empty line").to_string();
    let keys = fields
        .map(|field| {
            SenseKey::parse(field).map_err(|e| WsdError::BadLine {
                path: path.to_path_buf(),
                line: lineno,
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some((id, keys)))
}

/// Keep only instances whose lemma is in the vocabulary.
pub fn filter_by_vocab(instances: Vec<WsdInstance>, vocab: &VocabularyList) -> Vec<WsdInstance> {
    let before = instances.len();
    let kept: Vec<WsdInstance> = instances
        .into_iter()
        .filter(|i| vocab.contains(&i.lemma))
        .collect();
    log::info!(
        "vocabulary filter {}: kept {} of {} instances",
        vocab.name,
        kept.len(),
        before
    );
    kept
}

/// Scores for one instance set, fine plus one coarse column per inventory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub total: usize,
    pub fine_correct: usize,
    pub fine_accuracy: f64,
    pub coarse_correct_by_inventory: BTreeMap<String, usize>,
    pub coarse_accuracy: BTreeMap<String, f64>,
}

/// Count fine-correct predictions: the predicted key is one of the gold
/// keys. Instances without a prediction count as incorrect.
pub fn score_fine(
    instances: &[WsdInstance],
    predictions: &[Prediction],
) -> Result<usize, WsdError> {
    let by_id = prediction_map(instances, predictions)?;
    Ok(instances
        .iter()
        .filter(|inst| {
            by_id
                .get(inst.instance_id.as_str())
                .is_some_and(|p| inst.gold_keys.contains(p))
        })
        .count())
}

/// Count coarse-correct predictions under one inventory: fine-correct, or
/// the predicted key shares a group with some gold key.
pub fn score_coarse(
    instances: &[WsdInstance],
    predictions: &[Prediction],
    inventory: &Inventory,
) -> Result<usize, WsdError> {
    let by_id = prediction_map(instances, predictions)?;
    let membership = inventory.membership_index();
    Ok(instances
        .iter()
        .filter(|inst| match by_id.get(inst.instance_id.as_str()) {
            Some(predicted) => {
                inst.gold_keys.contains(predicted)
                    || co_grouped(&membership, predicted, &inst.gold_keys)
            }
            None => false,
        })
        .count())
}

fn co_grouped(
    membership: &HashMap<&str, Vec<usize>>,
    predicted: &SenseKey,
    gold_keys: &[SenseKey],
) -> bool {
    let Some(predicted_groups) = membership.get(predicted.raw()) else {
        return false;
    };
    gold_keys
        .iter()
        .filter_map(|k| membership.get(k.raw()))
        .any(|gold_groups| predicted_groups.iter().any(|g| gold_groups.contains(g)))
}

/// Score fine and coarse in one pass over every inventory.
pub fn score_report(
    instances: &[WsdInstance],
    predictions: &[Prediction],
    inventories: &[&Inventory],
) -> Result<ScoreReport, WsdError> {
    if instances.is_empty() {
        return Err(WsdError::NoInstances);
    }
    let total = instances.len();
    let fine_correct = score_fine(instances, predictions)?;
    let mut coarse_correct_by_inventory = BTreeMap::new();
    let mut coarse_accuracy = BTreeMap::new();
    for inventory in inventories {
        let correct = score_coarse(instances, predictions, inventory)?;
        coarse_correct_by_inventory.insert(inventory.inventory_id.clone(), correct);
        coarse_accuracy.insert(
            inventory.inventory_id.clone(),
            correct as f64 / total as f64,
        );
    }
    Ok(ScoreReport {
        total,
        fine_correct,
        fine_accuracy: fine_correct as f64 / total as f64,
        coarse_correct_by_inventory,
        coarse_accuracy,
    })
}

/// Validate and index predictions by instance id.
fn prediction_map<'p>(
    instances: &[WsdInstance],
    predictions: &'p [Prediction],
) -> Result<HashMap<&'p str, &'p SenseKey>, WsdError> {
    let known: HashMap<&str, ()> = instances
        .iter()
        .map(|i| (i.instance_id.as_str(), ()))
        .collect();
    let mut by_id = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if !known.contains_key(p.instance_id.as_str()) {
            return Err(WsdError::UnknownInstance {
                instance_id: p.instance_id.clone(),
            });
        }
        if by_id
            .insert(p.instance_id.as_str(), &p.predicted_key)
            .is_some()
        {
            return Err(WsdError::DuplicatePrediction {
                instance_id: p.instance_id.clone(),
            });
        }
    }
    Ok(by_id)
}

impl ScoreReport {
    /// Render as line-delimited JSON: a summary record, then one record per
    /// inventory.
    pub fn to_ndjson(&self) -> String {
        #[derive(Serialize)]
        struct SummaryLine {
            record: &'static str,
            total: usize,
            fine_correct: usize,
            fine_accuracy: f64,
        }
        #[derive(Serialize)]
        struct CoarseLine<'a> {
            record: &'static str,
            inventory_id: &'a str,
            coarse_correct: usize,
            coarse_accuracy: f64,
        }

        let mut out = String::new();
        let summary = SummaryLine {
            record: "wsd_summary",
            total: self.total,
            fine_correct: self.fine_correct,
            fine_accuracy: self.fine_accuracy,
        };
        out.push_str(&serde_json::to_string(&summary).expect("report serializes"));
        out.push('\n');
        for (inventory_id, &coarse_correct) in &self.coarse_correct_by_inventory {
            let line = CoarseLine {
                record: "wsd_coarse",
                inventory_id,
                coarse_correct,
                coarse_accuracy: self.coarse_accuracy[inventory_id],
            };
            out.push_str(&serde_json::to_string(&line).expect("report serializes"));
            out.push('\n');
        }
        out
    }

    /// Render as an aligned plain-text table.
    pub fn to_table(&self) -> String {
        let label_width = self
            .coarse_correct_by_inventory
            .keys()
            .map(|id| id.len() + "coarse[]".len())
            .chain(["scoring".len()])
            .max()
            .unwrap_or(7)
            .max("fine".len());
        let mut out = String::new();
        out.push_str(&format!(
            "{:<label_width$}  {:>7}  {:>7}  {:>8}\n",
            "scoring", "correct", "total", "accuracy"
        ));
        out.push_str(&format!(
            "{:<label_width$}  {:>7}  {:>7}  {:>8.4}\n",
            "fine", self.fine_correct, self.total, self.fine_accuracy
        ));
        for (inventory_id, &correct) in &self.coarse_correct_by_inventory {
            out.push_str(&format!(
                "{:<label_width$}  {:>7}  {:>7}  {:>8.4}\n",
                format!("coarse[{inventory_id}]"),
                correct,
                self.total,
                self.coarse_accuracy[inventory_id]
            ));
        }
        out
    }
}
