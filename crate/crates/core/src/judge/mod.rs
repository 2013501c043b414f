//! Definition-matching judgments through pluggable backends.
//!
//! A [`Judge`] renders a prompt, consults the content-addressed cache, and
//! only then asks its backend: the remote chat service, the deterministic
//! lexical baseline, or nothing at all (replay, which insists every answer
//! is already cached). All judgments flow back through the same parsers, so
//! downstream code never cares which backend answered.

pub mod baseline;
pub mod cache;
pub mod prompt;
pub mod remote;

pub use baseline::{
    lexical_baseline_binary, lexical_baseline_scale, lexical_baseline_scale_with,
    lexical_similarity, BaselineThresholds,
};
pub use cache::{request_digest, CacheRecord, JudgeCache};
pub use prompt::{
    parse_binary_response, parse_scale_response, render_binary_prompt, render_match_prompt,
    BINARY_TEMPLATE_ID, MATCH_TEMPLATE_ID,
};
pub use remote::{chat_request_body, extract_chat_content, RemoteBackend, API_KEY_ENV};

use std::fmt;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Errors from prompt rendering, configuration, and backend dispatch.
#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("empty {field}")]
    EmptyField { field: &'static str },
    #[error("marked sentence invalid: {reason} (sentence: {sentence:?})")]
    BadMarkedSentence { sentence: String, reason: String },
    #[error("invalid judge config: {reason}")]
    InvalidConfig { reason: String },
    #[error("environment variable SENSEFORGE_API_KEY is not set (required for the remote backend)")]
    MissingCredential,
    #[error("replay cache miss for {word:?} (digest {digest}) in {cache_path}")]
    ReplayMiss {
        word: String,
        digest: String,
        cache_path: PathBuf,
    },
    #[error("transport failure: {message}")]
    Transport { message: String },
    #[error("{path}:{line}: bad cache record: {reason}")]
    CacheParse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("cache io {path}: {source}")]
    CacheIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One point on the seven-point match scale.
#[derive(Clone, Copy, Debug, Eq, PartialEq, Ord, PartialOrd, Hash)]
pub struct MatchScale(u8);

impl MatchScale {
    /// The seven labels, indexed by `value - 1`.
    pub const LABELS: [&'static str; 7] = [
        "Exactly the same meaning",
        "Almost the same meaning",
        "Somewhat similar meaning",
        "Neither similar nor different meaning",
        "Somewhat different meaning",
        "Mostly different meaning",
        "Completely different meaning",
    ];

    pub fn new(value: u8) -> Option<MatchScale> {
        (1..=7).contains(&value).then_some(MatchScale(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn label(self) -> &'static str {
        Self::LABELS[usize::from(self.0) - 1]
    }
}

impl fmt::Display for MatchScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for MatchScale {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for MatchScale {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let value = u8::deserialize(de)?;
        MatchScale::new(value)
            .ok_or_else(|| serde::de::Error::custom(format!("match scale {value} outside 1..7")))
    }
}

/// Outcome of a YES/NO prompt.
#[derive(Clone, Copy, Debug, Eq, PartialEq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
    #[serde(rename = "INVALID")]
    Invalid,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "YES",
            Verdict::No => "NO",
            Verdict::Invalid => "INVALID",
        })
    }
}

/// One definition pair to be rated on the match scale.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchQuery {
    pub word: String,
    /// Slot 1 of the prompt: the dictionary definition.
    pub dict_definition: String,
    /// Slot 2 of the prompt: the WordNet definition.
    pub wordnet_definition: String,
}

impl MatchQuery {
    pub fn validate(&self) -> Result<(), JudgeError> {
        for (field, text) in [
            ("word", &self.word),
            ("dict_definition", &self.dict_definition),
            ("wordnet_definition", &self.wordnet_definition),
        ] {
            if text.trim().is_empty() {
                return Err(JudgeError::EmptyField { field });
            }
        }
        Ok(())
    }
}

/// A rated definition pair. `scale` is `None` when the response never
/// parsed, even after retries (INVALID).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchJudgment {
    pub query: MatchQuery,
    pub scale: Option<MatchScale>,
    pub raw_response: String,
    pub backend_id: String,
    pub cached: bool,
}

impl MatchJudgment {
    pub fn is_invalid(&self) -> bool {
        self.scale.is_none()
    }
}

/// An answered YES/NO prompt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryJudgment {
    pub verdict: Verdict,
    pub raw_response: String,
    pub backend_id: String,
    pub cached: bool,
}

/// Which backend answers on a cache miss.
#[derive(Clone, Copy, Debug, Eq, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Baseline,
    Replay,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Remote => "remote",
            BackendKind::Baseline => "baseline",
            BackendKind::Replay => "replay",
        })
    }
}

fn default_endpoint() -> String {
    "https://api.openai.com/v1/chat/completions".to_string()
}

fn default_model_id() -> String {
    "gpt-4o-2024-05-13".to_string()
}

fn default_system_message() -> String {
    "You are a professional linguist.".to_string()
}

fn default_max_retries() -> u32 {
    2
}

fn default_max_concurrent() -> usize {
    4
}

fn default_rpm() -> u32 {
    60
}

/// Judge configuration. The API credential is deliberately absent: it comes
/// only from the environment ([`API_KEY_ENV`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JudgeConfig {
    pub backend: BackendKind,
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    #[serde(default = "default_model_id")]
    pub model_id: String,
    #[serde(default = "default_system_message")]
    pub system_message: String,
    #[serde(default)]
    pub temperature: f64,
    /// Re-asks after the first attempt (on unparsable output or transport
    /// failure) before recording INVALID.
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_max_concurrent")]
    pub max_concurrent_requests: usize,
    #[serde(default = "default_rpm")]
    pub requests_per_minute: u32,
    pub cache_path: PathBuf,
    #[serde(default)]
    pub baseline_thresholds: BaselineThresholds,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig {
            backend: BackendKind::Baseline,
            endpoint: default_endpoint(),
            model_id: default_model_id(),
            system_message: default_system_message(),
            temperature: 0.0,
            max_retries: default_max_retries(),
            max_concurrent_requests: default_max_concurrent(),
            requests_per_minute: default_rpm(),
            cache_path: PathBuf::from("judge_cache.ndjson"),
            baseline_thresholds: BaselineThresholds::default(),
        }
    }
}

impl JudgeConfig {
    pub fn validate(&self) -> Result<(), JudgeError> {
        let fail = |reason: &str| JudgeError::InvalidConfig {
            reason: reason.to_string(),
        };
        if !(self.temperature >= 0.0) {
            return Err(fail("temperature must be ≥ 0"));
        }
        if self.max_concurrent_requests < 1 {
            return Err(fail("max_concurrent_requests must be ≥ 1"));
        }
        if self.requests_per_minute < 1 {
            return Err(fail("requests_per_minute must be ≥ 1"));
        }
        if self.cache_path.as_os_str().is_empty() {
            return Err(fail("cache_path must be set"));
        }
        Ok(())
    }

    /// Digest of the full configuration, recorded in artifacts so a report
    /// names the exact judging regime that produced it.
    pub fn digest(&self) -> String {
        // The cache location changes no answer; excluding it keeps artifacts
        // built from the same judging semantics reproducible across hosts.
        let mut semantic = self.clone();
        semantic.cache_path = PathBuf::new();
        let canonical = serde_json::to_string(&semantic).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex::encode(hasher.finalize())
    }
}

enum BackendImpl {
    Remote(RemoteBackend),
    Baseline,
    Replay,
}

/// A configured judge: prompt rendering, cache, backend, retry policy.
///
/// Shareable across threads; batch entry points fan work out over up to
/// `max_concurrent_requests` workers, and results are keyed by input
/// position, never by arrival order.
pub struct Judge {
    config: JudgeConfig,
    cache: JudgeCache,
    backend: BackendImpl,
}

impl Judge {
    pub fn new(config: JudgeConfig) -> Result<Judge, JudgeError> {
        config.validate()?;
        let cache = JudgeCache::load(&config.cache_path)?;
        let backend = match config.backend {
            BackendKind::Remote => BackendImpl::Remote(RemoteBackend::from_env(&config)?),
            BackendKind::Baseline => BackendImpl::Baseline,
            BackendKind::Replay => BackendImpl::Replay,
        };
        Ok(Judge {
            config,
            cache,
            backend,
        })
    }

    pub fn config(&self) -> &JudgeConfig {
        &self.config
    }

    pub fn cache(&self) -> &JudgeCache {
        &self.cache
    }

    /// Identifies who answers cache misses, e.g. `remote:gpt-4o-2024-05-13`.
    pub fn backend_id(&self) -> String {
        match self.config.backend {
            BackendKind::Remote => format!("remote:{}", self.config.model_id),
            BackendKind::Baseline => "baseline".to_string(),
            BackendKind::Replay => "replay".to_string(),
        }
    }

    /// Rate one definition pair on the seven-point scale.
    ///
    /// The cache is consulted first; on a miss the backend is asked, with up
    /// to `max_retries` re-asks on unparsable output, and the final answer is
    /// appended to the cache. Transport failures that exhaust the retry
    /// budget yield an INVALID judgment carrying the error note — those are
    /// not cached, so a later run can try again.
    pub fn judge_match(&self, query: &MatchQuery) -> Result<MatchJudgment, JudgeError> {
        let prompt = render_match_prompt(query)?;
        let digest = request_digest(
            MATCH_TEMPLATE_ID,
            &query.word,
            &query.dict_definition,
            &query.wordnet_definition,
            &self.config.model_id,
        );

        if let Some(record) = self.cache.get(&digest) {
            let scale = match record.parsed.as_str() {
                "INVALID" => None,
                text => text.parse::<u8>().ok().and_then(MatchScale::new),
            };
            return Ok(MatchJudgment {
                query: query.clone(),
                scale,
                raw_response: record.raw_response,
                backend_id: self.backend_id(),
                cached: true,
            });
        }

        let answer = self.ask(&prompt, &query.word, AnswerKind::Scale(query))?;
        let (raw_response, scale) = match answer {
            Asked::Text(raw) => {
                let scale = parse_scale_response(&raw);
                let parsed = scale
                    .map(|s| s.value().to_string())
                    .unwrap_or_else(|| "INVALID".to_string());
                self.cache.append(CacheRecord {
                    digest,
                    template_id: MATCH_TEMPLATE_ID.to_string(),
                    word: query.word.clone(),
                    def_a: query.dict_definition.clone(),
                    def_b: query.wordnet_definition.clone(),
                    model_id: self.config.model_id.clone(),
                    raw_response: raw.clone(),
                    parsed,
                })?;
                (raw, scale)
            }
            Asked::TransportFailed(note) => (format!("[transport failure] {note}"), None),
        };
        Ok(MatchJudgment {
            query: query.clone(),
            scale,
            raw_response,
            backend_id: self.backend_id(),
            cached: false,
        })
    }

    /// Ask whether `word`, marked in the sentence, is used with `definition`.
    ///
    /// Same cache/retry regime as [`judge_match`](Self::judge_match); the
    /// cache record stores the marked sentence in `def_a` and the definition
    /// in `def_b`.
    pub fn judge_binary(
        &self,
        word: &str,
        marked_sentence: &str,
        definition: &str,
    ) -> Result<BinaryJudgment, JudgeError> {
        let prompt = render_binary_prompt(word, marked_sentence, definition)?;
        let digest = request_digest(
            BINARY_TEMPLATE_ID,
            word,
            marked_sentence,
            definition,
            &self.config.model_id,
        );

        if let Some(record) = self.cache.get(&digest) {
            let verdict = match record.parsed.as_str() {
                "YES" => Verdict::Yes,
                "NO" => Verdict::No,
                _ => Verdict::Invalid,
            };
            return Ok(BinaryJudgment {
                verdict,
                raw_response: record.raw_response,
                backend_id: self.backend_id(),
                cached: true,
            });
        }

        let answer = self.ask(
            &prompt,
            word,
            AnswerKind::Binary {
                marked_sentence,
                definition,
            },
        )?;
        let (raw_response, verdict) = match answer {
            Asked::Text(raw) => {
                let verdict = parse_binary_response(&raw);
                self.cache.append(CacheRecord {
                    digest,
                    template_id: BINARY_TEMPLATE_ID.to_string(),
                    word: word.to_string(),
                    def_a: marked_sentence.to_string(),
                    def_b: definition.to_string(),
                    model_id: self.config.model_id.clone(),
                    raw_response: raw.clone(),
                    parsed: verdict.to_string(),
                })?;
                (raw, verdict)
            }
            Asked::TransportFailed(note) => {
                (format!("[transport failure] {note}"), Verdict::Invalid)
            }
        };
        Ok(BinaryJudgment {
            verdict,
            raw_response,
            backend_id: self.backend_id(),
            cached: false,
        })
    }

    /// Judge many pairs, fanning out over worker threads.
    ///
    /// Results come back in input order regardless of completion order; the
    /// first hard error (replay miss, cache I/O) aborts the batch.
    pub fn judge_match_batch(
        &self,
        queries: &[MatchQuery],
    ) -> Result<Vec<MatchJudgment>, JudgeError> {
        self.run_batch(queries, |q| self.judge_match(q))
    }

    /// Batch form of [`judge_binary`](Self::judge_binary); items are
    /// `(word, marked_sentence, definition)`.
    pub fn judge_binary_batch(
        &self,
        items: &[(String, String, String)],
    ) -> Result<Vec<BinaryJudgment>, JudgeError> {
        self.run_batch(items, |(w, s, d)| self.judge_binary(w, s, d))
    }

    fn run_batch<T, R, F>(&self, items: &[T], judge_one: F) -> Result<Vec<R>, JudgeError>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> Result<R, JudgeError> + Sync,
    {
        let n = items.len();
        let workers = self.config.max_concurrent_requests.min(n);
        if workers <= 1 {
            return items.iter().map(judge_one).collect();
        }

        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<R, JudgeError>>>> =
            (0..n).map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let result = judge_one(&items[i]);
                    *slots[i].lock().unwrap() = Some(result);
                });
            }
        });
        slots
            .into_iter()
            .map(|slot| slot.into_inner().unwrap().expect("every slot filled"))
            .collect()
    }

    fn ask(&self, prompt: &str, word: &str, kind: AnswerKind<'_>) -> Result<Asked, JudgeError> {
        match &self.backend {
            BackendImpl::Replay => {
                let digest = match kind {
                    AnswerKind::Scale(query) => request_digest(
                        MATCH_TEMPLATE_ID,
                        word,
                        &query.dict_definition,
                        &query.wordnet_definition,
                        &self.config.model_id,
                    ),
                    AnswerKind::Binary {
                        marked_sentence,
                        definition,
                    } => request_digest(
                        BINARY_TEMPLATE_ID,
                        word,
                        marked_sentence,
                        definition,
                        &self.config.model_id,
                    ),
                };
                Err(JudgeError::ReplayMiss {
                    word: word.to_string(),
                    digest,
                    cache_path: self.config.cache_path.clone(),
                })
            }
            BackendImpl::Baseline => {
                let raw = match kind {
                    AnswerKind::Scale(query) => lexical_baseline_scale_with(
                        &query.dict_definition,
                        &query.wordnet_definition,
                        &self.config.baseline_thresholds,
                    )?
                    .to_string(),
                    AnswerKind::Binary {
                        marked_sentence,
                        definition,
                    } => lexical_baseline_binary(marked_sentence, definition).to_string(),
                };
                Ok(Asked::Text(raw))
            }
            BackendImpl::Remote(remote) => {
                let attempts = self.config.max_retries.saturating_add(1);
                let mut last_text: Option<String> = None;
                let mut last_error: Option<String> = None;
                for attempt in 1..=attempts {
                    match remote.complete(&self.config, prompt) {
                        Ok(text) => {
                            let parses = match kind {
                                AnswerKind::Scale(_) => parse_scale_response(&text).is_some(),
                                AnswerKind::Binary { .. } => {
                                    parse_binary_response(&text) != Verdict::Invalid
                                }
                            };
                            last_text = Some(text);
                            if parses {
                                break;
                            }
                            log::warn!(
                                "unparsable response for {word:?} (attempt {attempt}/{attempts})"
                            );
                        }
                        Err(e) => {
                            log::warn!("{word:?}: {e} (attempt {attempt}/{attempts})");
                            last_error = Some(e.to_string());
                        }
                    }
                }
                match last_text {
                    Some(text) => Ok(Asked::Text(text)),
                    None => Ok(Asked::TransportFailed(
                        last_error.unwrap_or_else(|| "no attempt made".to_string()),
                    )),
                }
            }
        }
    }
}

enum AnswerKind<'a> {
    Scale(&'a MatchQuery),
    Binary {
        marked_sentence: &'a str,
        definition: &'a str,
    },
}

enum Asked {
    /// The backend produced text (which may still parse as INVALID).
    Text(String),
    /// No text was ever received; the note describes the last failure.
    TransportFailed(String),
}
