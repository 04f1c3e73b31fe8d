//! Backend configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mock::Corruption;
use super::QueryError;
use crate::floorplan::Difficulty;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    MockOracle,
    MockScripted,
    MockNoisy,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::HttpChat => "http_chat",
            BackendKind::MockOracle => "mock_oracle",
            BackendKind::MockScripted => "mock_scripted",
            BackendKind::MockNoisy => "mock_noisy",
        }
    }

    pub fn is_mock(self) -> bool {
        self != BackendKind::HttpChat
    }
}

/// Request/response shape for `http_chat`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adapter {
    /// `messages[].content` is a list of `text` and `image_url` parts with a
    /// data URL; the reply is `choices[0].message.content`.
    #[default]
    ContentParts,
    /// `messages[].content` holds an `image` part with a base64 `source`;
    /// the reply is the concatenated `text` blocks of `content`.
    Messages,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthStyle {
    /// `Authorization: Bearer <credential>`
    #[default]
    Bearer,
    /// `x-api-key: <credential>`
    ApiKeyHeader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub model: String,
    /// Name of the environment variable holding the credential.
    pub credential_env: Option<String>,
    pub adapter: Adapter,
    pub auth: AuthStyle,
    /// Extra request headers, e.g. an API version.
    pub headers: BTreeMap<String, String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: f64,
    pub max_retries: u32,
    /// First retry delay; doubles on each further attempt.
    pub backoff_ms: u64,
    /// Concurrent requests allowed against this backend.
    pub in_flight: usize,
    /// Sustained request rate; `None` means unlimited.
    pub requests_per_second: Option<f64>,
    pub seed: Option<u64>,
    pub p_error: f64,
    /// Error probability per task difficulty, overriding `p_error`.
    pub p_error_by_difficulty: BTreeMap<Difficulty, f64>,
    /// Corruptions the noisy mock may pick from; empty means all.
    pub corruptions: Vec<Corruption>,
    pub script: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::MockOracle,
            endpoint: None,
            model: String::new(),
            credential_env: None,
            adapter: Adapter::default(),
            auth: AuthStyle::default(),
            headers: BTreeMap::new(),
            temperature: 0.0,
            max_tokens: 1024,
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_ms: 500,
            in_flight: 4,
            requests_per_second: None,
            seed: None,
            p_error: 0.0,
            p_error_by_difficulty: BTreeMap::new(),
            corruptions: Vec::new(),
            script: None,
        }
    }
}

impl BackendConfig {
    pub fn mock_oracle() -> Self {
        Self::default()
    }

    pub fn mock_noisy(seed: u64, p_error: f64) -> Self {
        Self {
            kind: BackendKind::MockNoisy,
            seed: Some(seed),
            p_error,
            ..Self::default()
        }
    }

    pub fn mock_scripted(script: impl Into<PathBuf>) -> Self {
        Self {
            kind: BackendKind::MockScripted,
            script: Some(script.into()),
            ..Self::default()
        }
    }

    pub fn http_chat(endpoint: impl Into<String>, model: impl Into<String>, credential_env: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::HttpChat,
            endpoint: Some(endpoint.into()),
            model: model.into(),
            credential_env: Some(credential_env.into()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        let bad = |msg: &str| Err(QueryError::BadConfig(msg.to_string()));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        match self.kind {
            BackendKind::HttpChat => {
                if self.endpoint.as_deref().is_none_or(str::is_empty) {
                    return bad("http_chat needs an endpoint");
                }
                if self.credential_env.as_deref().is_none_or(str::is_empty) {
                    return bad("http_chat needs credential_env");
                }
                if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
                    return bad("timeout_secs must be > 0");
                }
            }
            BackendKind::MockNoisy => {
                if self.seed.is_none() {
                    return bad("mock_noisy needs a seed");
                }
                if !prob(self.p_error) || !self.p_error_by_difficulty.values().all(|p| prob(*p)) {
                    return bad("error probabilities must lie in [0, 1]");
                }
            }
            BackendKind::MockScripted => {
                if self.script.is_none() {
                    return bad("mock_scripted needs a script path");
                }
            }
            BackendKind::MockOracle => {}
        }
        if self.in_flight == 0 {
            return bad("in_flight must be >= 1");
        }
        if self.requests_per_second.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
            return bad("requests_per_second must be > 0");
        }
        Ok(())
    }

    pub fn p_error_for(&self, difficulty: Difficulty) -> f64 {
        self.p_error_by_difficulty.get(&difficulty).copied().unwrap_or(self.p_error)
    }

    /// Stable name for the cache directory. Covers every setting that can
    /// change a response, never the credential.
    pub fn identity(&self) -> String {
        match self.kind {
            BackendKind::MockOracle => "mock_oracle".into(),
            BackendKind::MockNoisy => {
                let mut h = Sha256::new();
                h.update(serde_json::to_vec(&(&self.p_error_by_difficulty, &self.corruptions)).unwrap());
                format!(
                    "mock_noisy-s{}-p{}-{}",
                    self.seed.unwrap_or(0),
                    self.p_error,
                    &hex::encode(h.finalize())[..8]
                )
            }
            BackendKind::MockScripted => {
                let name = self.script.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
                format!("mock_scripted-{}", &hex::encode(Sha256::digest(name.as_bytes()))[..8])
            }
            BackendKind::HttpChat => {
                let mut h = Sha256::new();
                h.update(self.endpoint.as_deref().unwrap_or("").as_bytes());
                h.update(serde_json::to_vec(&(self.adapter, self.temperature, self.max_tokens)).unwrap());
                let model: String = self
                    .model
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
                    .collect();
                format!("http_chat-{model}-{}", &hex::encode(h.finalize())[..8])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants() {
        assert!(BackendConfig::mock_oracle().validate().is_ok());
        assert!(BackendConfig::mock_noisy(1, 0.3).validate().is_ok());
        assert!(BackendConfig::mock_noisy(1, 1.3).validate().is_err());
        let mut noisy = BackendConfig::mock_noisy(1, 0.3);
        noisy.seed = None;
        assert!(noisy.validate().is_err());
        assert!(BackendConfig::http_chat("http://x", "m", "KEY").validate().is_ok());
        assert!(BackendConfig::http_chat("", "m", "KEY").validate().is_err());
        assert!(BackendConfig::http_chat("http://x", "m", "").validate().is_err());
    }

    #[test]
    fn identity_tracks_response_affecting_settings() {
        let a = BackendConfig::mock_noisy(1, 0.3);
        let mut b = a.clone();
        b.p_error_by_difficulty.insert(Difficulty::Hard, 0.5);
        assert_ne!(a.identity(), b.identity());
        assert_ne!(a.identity(), BackendConfig::mock_noisy(2, 0.3).identity());
        let h = BackendConfig::http_chat("https://api.example/v1/chat", "vision model/1", "KEY");
        assert!(h.identity().starts_with("http_chat-vision_model_1-"));
        let mut other_key = h.clone();
        other_key.credential_env = Some("OTHER".into());
        assert_eq!(h.identity(), other_key.identity());
    }

    #[test]
    fn config_json_round_trip_and_unknown_keys() {
        let mut c = BackendConfig::mock_noisy(3, 0.04);
        c.p_error_by_difficulty.insert(Difficulty::Easy, 0.1);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<BackendConfig>(&text).unwrap(), c);
        assert!(serde_json::from_str::<BackendConfig>(r#"{"kind": "mock_oracle", "nope": 1}"#).is_err());
    }
}
