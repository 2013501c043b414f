//! Cohesiveness experiments over a coarse sense inventory.
//!
//! Three modes probe how well grouped senses hang together. Each sampled
//! item pairs a tagged sentence for sense `s` with the definition of a sense
//! `s'`, and a binary judge answers whether the marked word is used with
//! that meaning:
//!
//! * `within`: `s` and `s'` are distinct members of one group, so YES rates
//!   measure group cohesion;
//! * `across`: `s'` is a sense of the same word that shares no group with
//!   `s`, so YES rates measure leakage between groups;
//! * `self`: `s' = s`, an upper bound on how often the judge recognises a
//!   sense in context at all.
//!
//! Sampling is seeded and reproducible: the same seed and a warmed judge
//! cache yield byte-identical reports.

pub mod corpus;

pub use corpus::{load_tagged_corpus, mark_target, OccurrenceIndex, TaggedSentence};

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grouper::{Inventory, SenseGroup};
use crate::judge::{BackendKind, BinaryJudgment, Judge, JudgeConfig, JudgeError, Verdict};
use crate::wordnet::{WordNetDatabase, WordNetSense};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("corpus file {path}: malformed XML: {reason}")]
    BadCorpus { path: PathBuf, reason: String },
    #[error("gold file {path} line {line}: {reason}")]
    BadGoldLine {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("gold instance id {instance_id} does not occur in the corpus")]
    GoldInstanceMissing { instance_id: String },
    #[error("target index {index} out of range for sentence of {len} tokens")]
    TargetIndexOutOfRange { index: usize, len: usize },
    #[error("sampling pool exhausted after {attempts} rejected draws: no {pool}")]
    SamplingExhausted { pool: String, attempts: usize },
    #[error("invalid experiment counts: {reason}")]
    BadCounts { reason: String },
    #[error("invalid experiment config: {reason}")]
    BadConfig { reason: String },
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Which sense pair each experiment item compares.
#[derive(Clone, Copy, Debug, Eq, PartialEq, Serialize, Deserialize)]
pub enum ExperimentMode {
    #[serde(rename = "within")]
    Within,
    #[serde(rename = "across")]
    Across,
    #[serde(rename = "self")]
    SelfRecognition,
}

impl fmt::Display for ExperimentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentMode::Within => "within",
            ExperimentMode::Across => "across",
            ExperimentMode::SelfRecognition => "self",
        })
    }
}

impl FromStr for ExperimentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "within" => Ok(ExperimentMode::Within),
            "across" => Ok(ExperimentMode::Across),
            "self" => Ok(ExperimentMode::SelfRecognition),
            other => Err(format!(
                "unknown experiment mode {other:?} (expected within, across, or self)"
            )),
        }
    }
}

fn default_n() -> usize {
    1000
}

fn default_reps() -> usize {
    5
}

/// Full description of one experiment run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: ExperimentMode,
    /// Items per repetition.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub seed: u64,
    /// Reuse the first repetition's group selection for every repetition
    /// instead of drawing fresh groups each time.
    #[serde(default)]
    pub fixed_groups: bool,
    pub judge: JudgeConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.n == 0 {
            return Err(EvalError::BadConfig {
                reason: "n must be at least 1".to_string(),
            });
        }
        if self.reps == 0 {
            return Err(EvalError::BadConfig {
                reason: "reps must be at least 1".to_string(),
            });
        }
        Ok(())
    }
}

/// Verdict tallies for one repetition; the three counts sum to `n`.
#[derive(Clone, Copy, Debug, Default, Eq, PartialEq, Serialize, Deserialize)]
pub struct RepCounts {
    pub yes: usize,
    pub no: usize,
    pub invalid: usize,
}

impl RepCounts {
    fn total(&self) -> usize {
        self.yes + self.no + self.invalid
    }
}

/// Aggregated outcome of an experiment.
///
/// INVALID verdicts are tracked separately and never folded into YES or NO,
/// but the ratios keep `n` as the denominator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub n: usize,
    pub per_rep: Vec<RepCounts>,
    pub avg_yes: f64,
    pub avg_no: f64,
    pub avg_invalid: f64,
    /// `avg_yes / n`.
    pub ratio_yes: f64,
    /// `avg_no / n`.
    pub ratio_no: f64,
}

impl ExperimentResult {
    /// Aggregate per-repetition counts into averages and ratios.
    pub fn from_counts(per_rep: Vec<RepCounts>, n: usize) -> Result<Self, EvalError> {
        if n == 0 {
            return Err(EvalError::BadCounts {
                reason: "n must be at least 1".to_string(),
            });
        }
        if per_rep.is_empty() {
            return Err(EvalError::BadCounts {
                reason: "no repetitions".to_string(),
            });
        }
        for (i, rep) in per_rep.iter().enumerate() {
            if rep.total() != n {
                return Err(EvalError::BadCounts {
                    reason: format!(
                        "repetition {} sums to {} but n = {}",
                        i + 1,
                        rep.total(),
                        n
                    ),
                });
            }
        }
        let reps = per_rep.len() as f64;
        let avg_yes = per_rep.iter().map(|r| r.yes as f64).sum::<f64>() / reps;
        let avg_no = per_rep.iter().map(|r| r.no as f64).sum::<f64>() / reps;
        let avg_invalid = per_rep.iter().map(|r| r.invalid as f64).sum::<f64>() / reps;
        Ok(ExperimentResult {
            n,
            per_rep,
            avg_yes,
            avg_no,
            avg_invalid,
            ratio_yes: avg_yes / n as f64,
            ratio_no: avg_no / n as f64,
        })
    }
}

/// One sampled experiment item before judging.
#[derive(Clone, Copy, Debug)]
pub struct SampledItem<'a> {
    /// The sense whose tagged sentence is shown.
    pub sense: &'a WordNetSense,
    /// The sense whose definition is judged against the sentence.
    pub other: &'a WordNetSense,
    pub sentence: &'a TaggedSentence,
    /// The group `sense` was drawn from; absent in self mode.
    pub group_id: Option<&'a str>,
}

/// Draw one item, rejecting and resampling ineligible draws.
///
/// Fails with a [`EvalError::SamplingExhausted`] naming the pool after
/// `max_attempts` rejections (callers typically pass `10 * n`).
pub fn sample_item<'a>(
    mode: ExperimentMode,
    inventory: &'a Inventory,
    db: &'a WordNetDatabase,
    index: &'a OccurrenceIndex,
    rng: &mut impl Rng,
    max_attempts: usize,
) -> Result<SampledItem<'a>, EvalError> {
    Sampler::new(mode, inventory, db, index).sample_rejecting(rng, max_attempts)
}

/// Run the configured experiment with the judge built from the config.
pub fn run_experiment(
    config: &ExperimentConfig,
    inventory: &Inventory,
    db: &WordNetDatabase,
    index: &OccurrenceIndex,
) -> Result<ExperimentResult, EvalError> {
    let judge = Judge::new(config.judge.clone())?;
    run_with(config, inventory, db, index, &|items| {
        judge.judge_binary_batch(items)
    })
}

/// Run with a caller-supplied judging function instead of a [`Judge`].
///
/// The plumbing guarantee is testable this way: a constant-YES function
/// yields `ratio_yes = 1.0` in any mode.
pub fn run_experiment_with<F>(
    config: &ExperimentConfig,
    inventory: &Inventory,
    db: &WordNetDatabase,
    index: &OccurrenceIndex,
    judge_fn: F,
) -> Result<ExperimentResult, EvalError>
where
    F: Fn(&str, &str, &str) -> Result<BinaryJudgment, JudgeError>,
{
    run_with(config, inventory, db, index, &|items| {
        items
            .iter()
            .map(|(word, sentence, definition)| judge_fn(word, sentence, definition))
            .collect()
    })
}

type BatchRunner<'r> =
    dyn Fn(&[(String, String, String)]) -> Result<Vec<BinaryJudgment>, JudgeError> + 'r;

fn run_with(
    config: &ExperimentConfig,
    inventory: &Inventory,
    db: &WordNetDatabase,
    index: &OccurrenceIndex,
    runner: &BatchRunner<'_>,
) -> Result<ExperimentResult, EvalError> {
    config.validate()?;
    let sampler = Sampler::new(config.mode, inventory, db, index);
    let eligible = sampler.eligible_slots();
    if eligible.is_empty() {
        return Err(EvalError::SamplingExhausted {
            pool: sampler.pool_name(),
            attempts: 0,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut fixed_plan: Option<Vec<usize>> = None;
    let mut per_rep = Vec::with_capacity(config.reps);
    for rep in 1..=config.reps {
        let selection = if let (true, Some(plan)) = (config.fixed_groups, fixed_plan.as_ref()) {
            plan.clone()
        } else {
            let plan = plan_rep(rep, &eligible, config.n, &sampler, &mut rng);
            if config.fixed_groups {
                fixed_plan = Some(plan.clone());
            }
            plan
        };

        let mut items = Vec::with_capacity(config.n);
        for &slot in &selection {
            let item =
                sampler
                    .item_from(slot, &mut rng)
                    .ok_or_else(|| EvalError::SamplingExhausted {
                        pool: sampler.pool_name(),
                        attempts: 1,
                    })?;
            let marked = mark_target(item.sentence)?;
            items.push((
                item.sense.lemma.clone(),
                marked,
                item.other.definition.clone(),
            ));
        }

        let judgments = runner(&items)?;
        let mut counts = RepCounts::default();
        for judgment in &judgments {
            match judgment.verdict {
                Verdict::Yes => counts.yes += 1,
                Verdict::No => counts.no += 1,
                Verdict::Invalid => counts.invalid += 1,
            }
        }
        per_rep.push(counts);
    }
    ExperimentResult::from_counts(per_rep, config.n)
}

/// Pick the groups (or senses, in self mode) for one repetition: without
/// replacement when the eligible pool covers `n`, with replacement (and a
/// warning) otherwise.
fn plan_rep(
    rep: usize,
    eligible: &[usize],
    n: usize,
    sampler: &Sampler<'_>,
    rng: &mut impl Rng,
) -> Vec<usize> {
    if eligible.len() < n {
        log::warn!(
            "repetition {rep}: only {} {} for n = {n}; sampling with replacement",
            eligible.len(),
            sampler.pool_name(),
        );
        return (0..n)
            .map(|_| eligible[rng.random_range(0..eligible.len())])
            .collect();
    }
    let mut order = eligible.to_vec();
    order.shuffle(rng);
    order.truncate(n);
    order
}

/// Precomputed sampling state shared by [`sample_item`] and the runner.
struct Sampler<'a> {
    mode: ExperimentMode,
    inventory: &'a Inventory,
    db: &'a WordNetDatabase,
    index: &'a OccurrenceIndex,
    /// Sense key → indices of the groups containing it.
    membership: HashMap<&'a str, Vec<usize>>,
    /// Self mode only: indexed senses that resolve in the database.
    self_pool: Vec<&'a WordNetSense>,
}

impl<'a> Sampler<'a> {
    fn new(
        mode: ExperimentMode,
        inventory: &'a Inventory,
        db: &'a WordNetDatabase,
        index: &'a OccurrenceIndex,
    ) -> Self {
        let membership = inventory.membership_index();
        let self_pool = match mode {
            ExperimentMode::SelfRecognition => {
                index.keys().filter_map(|k| db.sense_by_key(k)).collect()
            }
            _ => Vec::new(),
        };
        Sampler {
            mode,
            inventory,
            db,
            index,
            membership,
            self_pool,
        }
    }

    fn pool_name(&self) -> String {
        match self.mode {
            ExperimentMode::Within => format!(
                "groups in inventory {} with two members and a tagged occurrence",
                self.inventory.inventory_id
            ),
            ExperimentMode::Across => format!(
                "groups in inventory {} with a tagged member that has out-of-group senses",
                self.inventory.inventory_id
            ),
            ExperimentMode::SelfRecognition => {
                "tagged senses present in the database".to_string()
            }
        }
    }

    /// Indices (into the groups, or the self pool) that can produce an item.
    fn eligible_slots(&self) -> Vec<usize> {
        match self.mode {
            ExperimentMode::SelfRecognition => (0..self.self_pool.len()).collect(),
            _ => (0..self.inventory.groups.len())
                .filter(|&gi| self.group_is_eligible(gi))
                .collect(),
        }
    }

    fn sample_rejecting(
        &self,
        rng: &mut impl Rng,
        max_attempts: usize,
    ) -> Result<SampledItem<'a>, EvalError> {
        let pool_len = match self.mode {
            ExperimentMode::SelfRecognition => self.self_pool.len(),
            _ => self.inventory.groups.len(),
        };
        if pool_len == 0 {
            return Err(EvalError::SamplingExhausted {
                pool: self.pool_name(),
                attempts: 0,
            });
        }
        for _ in 0..max_attempts {
            let slot = rng.random_range(0..pool_len);
            if let Some(item) = self.item_from(slot, rng) {
                return Ok(item);
            }
        }
        Err(EvalError::SamplingExhausted {
            pool: self.pool_name(),
            attempts: max_attempts,
        })
    }

    /// Build an item from one slot; `None` means the slot is ineligible.
    ///
    /// Eligibility is decided before any random draw, so a rejection costs
    /// exactly the one draw that picked the slot.
    fn item_from(&self, slot: usize, rng: &mut impl Rng) -> Option<SampledItem<'a>> {
        if self.mode == ExperimentMode::SelfRecognition {
            let sense = *self.self_pool.get(slot)?;
            let occurrences = self.index.sentences_for(sense.key.raw());
            let sentence = &occurrences[rng.random_range(0..occurrences.len())];
            return Some(SampledItem {
                sense,
                other: sense,
                sentence,
                group_id: None,
            });
        }

        let group = self.inventory.groups.get(slot)?;
        let members = self.db_members(group);
        match self.mode {
            ExperimentMode::Within => {
                if members.len() < 2 {
                    return None;
                }
                let tagged: Vec<&WordNetSense> = members
                    .iter()
                    .copied()
                    .filter(|s| self.has_occurrences(s))
                    .collect();
                if tagged.is_empty() {
                    return None;
                }
                let sense = tagged[rng.random_range(0..tagged.len())];
                let others: Vec<&WordNetSense> = members
                    .iter()
                    .copied()
                    .filter(|t| t.key != sense.key)
                    .collect();
                let other = others[rng.random_range(0..others.len())];
                Some(self.finish_item(group, sense, other, rng))
            }
            ExperimentMode::Across => {
                let candidates: Vec<(&WordNetSense, Vec<&WordNetSense>)> = members
                    .iter()
                    .copied()
                    .filter(|s| self.has_occurrences(s))
                    .map(|s| (s, self.complement_of(group, s)))
                    .filter(|(_, complement)| !complement.is_empty())
                    .collect();
                if candidates.is_empty() {
                    return None;
                }
                let (sense, complement) = &candidates[rng.random_range(0..candidates.len())];
                let other = complement[rng.random_range(0..complement.len())];
                Some(self.finish_item(group, sense, other, rng))
            }
            ExperimentMode::SelfRecognition => unreachable!("handled above"),
        }
    }

    fn finish_item(
        &self,
        group: &'a SenseGroup,
        sense: &'a WordNetSense,
        other: &'a WordNetSense,
        rng: &mut impl Rng,
    ) -> SampledItem<'a> {
        let occurrences = self.index.sentences_for(sense.key.raw());
        let sentence = &occurrences[rng.random_range(0..occurrences.len())];
        SampledItem {
            sense,
            other,
            sentence,
            group_id: Some(&group.group_id),
        }
    }

    fn group_is_eligible(&self, gi: usize) -> bool {
        let group = &self.inventory.groups[gi];
        let members = self.db_members(group);
        match self.mode {
            ExperimentMode::Within => {
                members.len() >= 2 && members.iter().any(|s| self.has_occurrences(s))
            }
            ExperimentMode::Across => members
                .iter()
                .any(|s| self.has_occurrences(s) && !self.complement_of(group, s).is_empty()),
            ExperimentMode::SelfRecognition => false,
        }
    }

    fn db_members(&self, group: &SenseGroup) -> Vec<&'a WordNetSense> {
        group
            .members
            .iter()
            .filter_map(|k| self.db.sense_by_key(k.raw()))
            .collect()
    }

    fn has_occurrences(&self, sense: &WordNetSense) -> bool {
        !self.index.sentences_for(sense.key.raw()).is_empty()
    }

    /// Same-word, same-broad-PoS senses that share no group with `sense`.
    fn complement_of(&self, group: &SenseGroup, sense: &WordNetSense) -> Vec<&'a WordNetSense> {
        self.db
            .lookup_senses_broad(&group.word, group.pos.broad())
            .into_iter()
            .filter(|t| {
                t.key.raw() != sense.key.raw()
                    && !self.share_group(sense.key.raw(), t.key.raw())
            })
            .collect()
    }

    fn share_group(&self, a: &str, b: &str) -> bool {
        match (self.membership.get(a), self.membership.get(b)) {
            (Some(ga), Some(gb)) => ga.iter().any(|g| gb.contains(g)),
            _ => false,
        }
    }
}

/// Self-describing experiment report, one JSON record per line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohesionReport {
    pub mode: ExperimentMode,
    pub inventory_id: String,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub judge_backend: String,
    pub judge_config_digest: String,
    pub result: ExperimentResult,
}

impl CohesionReport {
    pub fn new(config: &ExperimentConfig, inventory_id: &str, result: ExperimentResult) -> Self {
        let judge_backend = match config.judge.backend {
            BackendKind::Remote => "remote",
            BackendKind::Baseline => "baseline",
            BackendKind::Replay => "replay",
        };
        CohesionReport {
            mode: config.mode,
            inventory_id: inventory_id.to_string(),
            n: config.n,
            reps: config.reps,
            seed: config.seed,
            judge_backend: judge_backend.to_string(),
            judge_config_digest: config.judge.digest(),
            result,
        }
    }

    /// Render as line-delimited JSON: a meta record, one record per
    /// repetition, and a summary record.
    pub fn to_ndjson(&self) -> String {
        #[derive(Serialize)]
        struct MetaLine<'a> {
            record: &'static str,
            mode: ExperimentMode,
            inventory_id: &'a str,
            n: usize,
            reps: usize,
            seed: u64,
            judge_backend: &'a str,
            judge_config_digest: &'a str,
        }
        #[derive(Serialize)]
        struct RepLine {
            record: &'static str,
            rep: usize,
            yes: usize,
            no: usize,
            invalid: usize,
        }
        #[derive(Serialize)]
        struct SummaryLine {
            record: &'static str,
            avg_yes: f64,
            avg_no: f64,
            avg_invalid: f64,
            ratio_yes: f64,
            ratio_no: f64,
        }

        let mut out = String::new();
        let meta = MetaLine {
            record: "cohesion_meta",
            mode: self.mode,
            inventory_id: &self.inventory_id,
            n: self.n,
            reps: self.reps,
            seed: self.seed,
            judge_backend: &self.judge_backend,
            judge_config_digest: &self.judge_config_digest,
        };
        out.push_str(&serde_json::to_string(&meta).expect("report serializes"));
        out.push('\n');
        for (i, rep) in self.result.per_rep.iter().enumerate() {
            let line = RepLine {
                record: "rep",
                rep: i + 1,
                yes: rep.yes,
                no: rep.no,
                invalid: rep.invalid,
            };
            out.push_str(&serde_json::to_string(&line).expect("report serializes"));
            out.push('\n');
        }
        let summary = SummaryLine {
            record: "summary",
            avg_yes: self.result.avg_yes,
            avg_no: self.result.avg_no,
            avg_invalid: self.result.avg_invalid,
            ratio_yes: self.result.ratio_yes,
            ratio_no: self.result.ratio_no,
        };
        out.push_str(&serde_json::to_string(&summary).expect("report serializes"));
        out.push('\n');
        out
    }
}
