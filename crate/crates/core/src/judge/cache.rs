//! Content-addressed judgment cache.
//!
//! Every judgment a backend produces is appended to a line-delimited JSON
//! file keyed by a digest of the request content. Reruns of an experiment
//! then replay from the file instead of paying for remote calls, and the
//! file doubles as an audit trail of raw model output. Appends go through a
//! single mutex-guarded writer so concurrent judging threads never interleave
//! partial lines.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::JudgeError;

/// One cached judgment: full request content plus the backend's reply.
///
/// `parsed` holds the canonical parse of `raw_response`: `"1"`..`"7"` for
/// scale prompts, `"YES"`/`"NO"` for binary prompts, `"INVALID"` otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub digest: String,
    pub template_id: String,
    pub word: String,
    pub def_a: String,
    pub def_b: String,
    pub model_id: String,
    pub raw_response: String,
    pub parsed: String,
}

/// Digest identifying a judgment request by content.
///
/// Covers the template, target word, both text slots, and the model id —
/// everything that changes the answer — joined with an unambiguous separator.
pub fn request_digest(
    template_id: &str,
    word: &str,
    def_a: &str,
    def_b: &str,
    model_id: &str,
) -> String {
    let mut hasher = Sha256::new();
    for (i, part) in [template_id, word, def_a, def_b, model_id].iter().enumerate() {
        if i > 0 {
            hasher.update([0x1f]);
        }
        hasher.update(part.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Append-only judgment cache backed by a line-delimited JSON file.
///
/// A missing file is an empty cache; the file is created on first append.
/// When the file holds several records with the same digest (appended by
/// successive runs), the last one wins.
#[derive(Debug)]
pub struct JudgeCache {
    path: PathBuf,
    records: Mutex<HashMap<String, CacheRecord>>,
}

impl JudgeCache {
    /// Load the cache file at `path`, or start empty if it does not exist.
    pub fn load(path: impl AsRef<Path>) -> Result<JudgeCache, JudgeError> {
        let path = path.as_ref().to_path_buf();
        let mut records = HashMap::new();
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|source| JudgeError::CacheIo {
                path: path.clone(),
                source,
            })?;
            for (lineno, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record: CacheRecord =
                    serde_json::from_str(line).map_err(|e| JudgeError::CacheParse {
                        path: path.clone(),
                        line: lineno + 1,
                        reason: e.to_string(),
                    })?;
                records.insert(record.digest.clone(), record);
            }
        }
        log::debug!(
            "judgment cache {}: {} records",
            path.display(),
            records.len()
        );
        Ok(JudgeCache {
            path,
            records: Mutex::new(records),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.records.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Look up a judgment by request digest.
    pub fn get(&self, digest: &str) -> Option<CacheRecord> {
        self.records.lock().unwrap().get(digest).cloned()
    }

    /// Append a judgment to the file and the in-memory index.
    pub fn append(&self, record: CacheRecord) -> Result<(), JudgeError> {
        let line = serde_json::to_string(&record).expect("cache record serializes");
        let mut records = self.records.lock().unwrap();
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|source| JudgeError::CacheIo {
                    path: self.path.clone(),
                    source,
                })?;
            }
        }
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|source| JudgeError::CacheIo {
                path: self.path.clone(),
                source,
            })?;
        writeln!(file, "{line}").map_err(|source| JudgeError::CacheIo {
            path: self.path.clone(),
            source,
        })?;
        records.insert(record.digest.clone(), record);
        Ok(())
    }

    /// All records, sorted by digest for deterministic iteration.
    pub fn records_sorted(&self) -> Vec<CacheRecord> {
        let records = self.records.lock().unwrap();
        let mut out: Vec<CacheRecord> = records.values().cloned().collect();
        out.sort_by(|a, b| a.digest.cmp(&b.digest));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(digest: &str, raw: &str, parsed: &str) -> CacheRecord {
        CacheRecord {
            digest: digest.to_string(),
            template_id: "match_v1".to_string(),
            word: "say".to_string(),
            def_a: "to speak words".to_string(),
            def_b: "utter aloud".to_string(),
            model_id: "gpt-4o-2024-05-13".to_string(),
            raw_response: raw.to_string(),
            parsed: parsed.to_string(),
        }
    }

    #[test]
    fn digest_is_stable_and_content_sensitive() {
        let d1 = request_digest("match_v1", "say", "a", "b", "m");
        let d2 = request_digest("match_v1", "say", "a", "b", "m");
        assert_eq!(d1, d2);
        assert_eq!(d1.len(), 64);
        assert_ne!(d1, request_digest("match_v1", "say", "a", "b", "other"));
        assert_ne!(d1, request_digest("binary_v1", "say", "a", "b", "m"));
        // Field boundaries matter: ("ab","") must differ from ("a","b").
        assert_ne!(
            request_digest("t", "w", "ab", "", "m"),
            request_digest("t", "w", "a", "b", "m")
        );
    }

    #[test]
    fn missing_file_is_an_empty_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cache = JudgeCache::load(dir.path().join("cache.ndjson")).unwrap();
        assert!(cache.is_empty());
        assert!(cache.get("anything").is_none());
    }

    #[test]
    fn append_then_reload_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.ndjson");
        let cache = JudgeCache::load(&path).unwrap();
        cache.append(record("d1", "2", "2")).unwrap();
        cache.append(record("d2", "nonsense", "INVALID")).unwrap();
        assert_eq!(cache.get("d1").unwrap().parsed, "2");

        let reloaded = JudgeCache::load(&path).unwrap();
        assert_eq!(reloaded.len(), 2);
        assert_eq!(reloaded.get("d2").unwrap().parsed, "INVALID");
    }

    #[test]
    fn last_record_wins_on_duplicate_digest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.ndjson");
        let cache = JudgeCache::load(&path).unwrap();
        cache.append(record("d1", "3", "3")).unwrap();
        cache.append(record("d1", "2", "2")).unwrap();
        let reloaded = JudgeCache::load(&path).unwrap();
        assert_eq!(reloaded.len(), 1);
        assert_eq!(reloaded.get("d1").unwrap().parsed, "2");
    }

    #[test]
    fn malformed_line_is_reported_with_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.ndjson");
        fs::write(&path, "{not json}\n").unwrap();
        let err = JudgeCache::load(&path).unwrap_err();
        match err {
            JudgeError::CacheParse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn concurrent_appends_never_interleave() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.ndjson");
        let cache = JudgeCache::load(&path).unwrap();
        std::thread::scope(|s| {
            for t in 0..8 {
                let cache = &cache;
                s.spawn(move || {
                    for i in 0..25 {
                        cache
                            .append(record(&format!("d{t}_{i}"), "2", "2"))
                            .unwrap();
                    }
                });
            }
        });
        let reloaded = JudgeCache::load(&path).unwrap();
        assert_eq!(reloaded.len(), 200);
    }
}
