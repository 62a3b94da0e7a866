use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

fn default_temperature() -> f64 {
    0.0
}
fn default_max_output_tokens() -> u32 {
    512
}
fn default_timeout() -> f64 {
    120.0
}
fn default_max_retries() -> u32 {
    4
}
fn default_max_in_flight() -> usize {
    4
}
fn default_backoff_ms() -> u64 {
    500
}
fn default_api_key_env() -> String {
    "ANAPHORA_API_KEY".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model_id: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    /// Per-request timeout in seconds.
    #[serde(default = "default_timeout")]
    pub request_timeout: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    /// First retry delay; doubles on each further retry.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    /// Environment variable holding the bearer token, if any.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("max_in_flight must be at least 1")]
    MaxInFlight,
    #[error("temperature must be a finite value >= 0, got {0}")]
    Temperature(f64),
    #[error("request_timeout must be a positive number of seconds, got {0}")]
    Timeout(f64),
    #[error("base_url must start with http:// or https://, got {0:?}")]
    BaseUrl(String),
    #[error("model_id must not be empty")]
    ModelId,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model_id: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            model_id: model_id.into(),
            temperature: default_temperature(),
            max_output_tokens: default_max_output_tokens(),
            request_timeout: default_timeout(),
            max_retries: default_max_retries(),
            max_in_flight: default_max_in_flight(),
            backoff_ms: default_backoff_ms(),
            api_key_env: default_api_key_env(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_in_flight < 1 {
            return Err(ConfigError::MaxInFlight);
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(ConfigError::Temperature(self.temperature));
        }
        if !(self.request_timeout.is_finite() && self.request_timeout > 0.0) {
            return Err(ConfigError::Timeout(self.request_timeout));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(ConfigError::BaseUrl(self.base_url.clone()));
        }
        if self.model_id.trim().is_empty() {
            return Err(ConfigError::ModelId);
        }
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.request_timeout)
    }

    /// Delay before retry number `retry` (0-based), capped at 60 s.
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64 << retry.min(16);
        Duration::from_millis(self.backoff_ms.saturating_mul(factor).min(60_000))
    }
}
