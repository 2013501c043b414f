//! Remote chat-completion backend.
//!
//! Speaks the ubiquitous JSON-over-HTTP chat API: one system message, one
//! user message, explicit temperature. The credential comes exclusively from
//! the `SENSEFORGE_API_KEY` environment variable so it can never leak into
//! config files, reports, or caches.

use std::cmp;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::{JudgeConfig, JudgeError};

/// Environment variable holding the API credential for the remote backend.
pub const API_KEY_ENV: &str = "SENSEFORGE_API_KEY";

/// Build the chat-completion request body for one user message.
pub fn chat_request_body(config: &JudgeConfig, user_message: &str) -> serde_json::Value {
    serde_json::json!({
        "model": config.model_id,
        "messages": [
            { "role": "system", "content": config.system_message },
            { "role": "user", "content": user_message },
        ],
        "temperature": config.temperature,
    })
}

/// Pull the assistant text out of a chat-completion response.
pub fn extract_chat_content(response: &serde_json::Value) -> Option<String> {
    response
        .get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(str::to_string)
}

/// Spaces out acquisitions so sustained throughput stays at the configured
/// requests-per-minute. Each caller reserves the next free slot under the
/// lock, then sleeps outside it, so concurrent threads queue fairly.
#[derive(Debug)]
pub struct Throttle {
    min_interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl Throttle {
    pub fn new(requests_per_minute: u32) -> Throttle {
        let rpm = cmp::max(requests_per_minute, 1);
        Throttle {
            min_interval: Duration::from_secs_f64(60.0 / f64::from(rpm)),
            next_slot: Mutex::new(None),
        }
    }

    /// Block until this caller's reserved slot arrives.
    pub fn wait(&self) {
        let now = Instant::now();
        let slot = {
            let mut next = self.next_slot.lock().unwrap();
            let slot = match *next {
                Some(at) => cmp::max(at, now),
                None => now,
            };
            *next = Some(slot + self.min_interval);
            slot
        };
        if slot > now {
            std::thread::sleep(slot - now);
        }
    }
}

/// HTTP client for the chat endpoint, throttled and credentialed.
pub struct RemoteBackend {
    endpoint: String,
    api_key: String,
    throttle: Throttle,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // The credential must never appear in debug output or logs.
        f.debug_struct("RemoteBackend")
            .field("endpoint", &self.endpoint)
            .finish_non_exhaustive()
    }
}

impl RemoteBackend {
    pub fn new(endpoint: &str, api_key: &str, requests_per_minute: u32) -> RemoteBackend {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        RemoteBackend {
            endpoint: endpoint.to_string(),
            api_key: api_key.to_string(),
            throttle: Throttle::new(requests_per_minute),
            agent: config.into(),
        }
    }

    /// Construct from config, reading the credential from the environment.
    pub fn from_env(config: &JudgeConfig) -> Result<RemoteBackend, JudgeError> {
        let api_key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or(JudgeError::MissingCredential)?;
        Ok(RemoteBackend::new(
            &config.endpoint,
            &api_key,
            config.requests_per_minute,
        ))
    }

    /// Send one prompt and return the assistant's raw text.
    pub fn complete(
        &self,
        config: &JudgeConfig,
        user_message: &str,
    ) -> Result<String, JudgeError> {
        self.throttle.wait();
        let body = chat_request_body(config, user_message);
        let transport = |message: String| JudgeError::Transport { message };

        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send_json(&body)
            .map_err(|e| transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| transport(e.to_string()))?;
        if !status.is_success() {
            let snippet: String = text.chars().take(500).collect();
            return Err(transport(format!("HTTP {status}: {snippet}")));
        }
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| transport(format!("unparsable response body: {e}")))?;
        extract_chat_content(&value)
            .ok_or_else(|| transport("response carries no message content".to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judge::BackendKind;

    fn test_config() -> JudgeConfig {
        JudgeConfig {
            backend: BackendKind::Remote,
            ..JudgeConfig::default()
        }
    }

    #[test]
    fn request_body_carries_system_message_and_temperature() {
        let config = test_config();
        let body = chat_request_body(&config, "Please assess…");
        assert_eq!(body["model"], "gpt-4o-2024-05-13");
        assert_eq!(body["temperature"], 0.0);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["messages"][0]["content"], "You are a professional linguist.");
        assert_eq!(body["messages"][1]["role"], "user");
        assert_eq!(body["messages"][1]["content"], "Please assess…");
    }

    #[test]
    fn content_extraction_reads_first_choice() {
        let response = serde_json::json!({
            "choices": [ { "message": { "role": "assistant", "content": "2" } } ]
        });
        assert_eq!(extract_chat_content(&response).as_deref(), Some("2"));
        assert_eq!(extract_chat_content(&serde_json::json!({})), None);
        assert_eq!(
            extract_chat_content(&serde_json::json!({"choices": []})),
            None
        );
    }

    #[test]
    fn throttle_spaces_out_acquisitions() {
        // 1200 rpm → 50 ms between slots; three waits span at least 100 ms.
        let throttle = Throttle::new(1200);
        let start = Instant::now();
        throttle.wait();
        throttle.wait();
        throttle.wait();
        assert!(start.elapsed() >= Duration::from_millis(100));
    }

    #[test]
    fn unreachable_endpoint_is_a_transport_error() {
        let backend = RemoteBackend::new("http://127.0.0.1:1/v1/chat/completions", "test", 6000);
        let err = backend.complete(&test_config(), "hello").unwrap_err();
        assert!(matches!(err, JudgeError::Transport { .. }), "{err:?}");
    }

    #[test]
    fn debug_output_hides_the_credential() {
        let backend = RemoteBackend::new("http://localhost/v1", "super-secret", 60);
        let rendered = format!("{backend:?}");
        assert!(!rendered.contains("super-secret"));
    }
}
