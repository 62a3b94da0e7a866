use std::time::Instant;

use async_trait::async_trait;
use log::{debug, warn};
use serde_json::{json, Value};

use crate::{
    millis, AttemptLog, CompletionBackend, CompletionRequest, ConfigError, EndpointConfig,
    LlmError, Outcome,
};

/// OpenAI-compatible chat-completions backend.
pub struct HttpBackend {
    config: EndpointConfig,
    client: reqwest::Client,
    api_key: Option<String>,
}

enum Attempt {
    Done(Result<String, LlmError>),
    /// Transient failure worth retrying; `reached` is false when no HTTP
    /// response came back at all.
    Retry {
        detail: String,
        reached: bool,
    },
}

impl HttpBackend {
    pub fn new(config: EndpointConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let client = reqwest::Client::builder()
            .timeout(config.timeout())
            .build()
            .expect("TLS backend initialises");
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty());
        Ok(HttpBackend {
            config,
            client,
            api_key,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn body(&self, prompt: &str) -> Value {
        json!({
            "model": self.config.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        })
    }

    async fn attempt(&self, body: &Value, log: &mut AttemptLog) -> Attempt {
        let mut req = self.client.post(self.config.completions_url()).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) => {
                let detail = e.to_string();
                log.error = Some(detail.clone());
                return Attempt::Retry {
                    detail,
                    reached: e.is_timeout() && !e.is_connect(),
                };
            }
        };
        let status = resp.status();
        log.status = Some(status.as_u16());
        let text = match resp.text().await {
            Ok(t) => t,
            Err(e) => {
                let detail = format!("reading body: {e}");
                log.error = Some(detail.clone());
                return Attempt::Retry {
                    detail,
                    reached: true,
                };
            }
        };
        if status.as_u16() == 429 || status.is_server_error() {
            let detail = format!("HTTP {status}");
            log.error = Some(detail.clone());
            return Attempt::Retry {
                detail,
                reached: true,
            };
        }
        if !status.is_success() {
            let detail: String = text.chars().take(500).collect();
            log.error = Some(format!("HTTP {status}"));
            return Attempt::Done(Err(LlmError::RequestRejected {
                status: status.as_u16(),
                detail,
            }));
        }
        let parsed = extract_content(&text);
        if let Err(e) = &parsed {
            log.error = Some(e.to_string());
        }
        Attempt::Done(parsed)
    }
}

/// Text of the first choice: `message.content`, or legacy `text`.
fn extract_content(body: &str) -> Result<String, LlmError> {
    let malformed = |detail: String| LlmError::MalformedResponse { detail };
    let v: Value = serde_json::from_str(body).map_err(|e| malformed(format!("not JSON: {e}")))?;
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| malformed("no choices".into()))?;
    let content = choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"));
    match content {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Null) => Ok(String::new()),
        _ => Err(malformed("first choice has no text content".into())),
    }
}

#[async_trait]
impl CompletionBackend for HttpBackend {
    async fn complete(&self, request: &CompletionRequest) -> Outcome {
        let body = self.body(&request.prompt);
        let mut attempts = Vec::new();
        let mut ever_reached = false;
        let mut last = String::new();
        for n in 0..=self.config.max_retries {
            if n > 0 {
                let delay = self.config.backoff(n - 1);
                debug!("{}: retry {n} in {delay:?}", request.id);
                tokio::time::sleep(delay).await;
            }
            let started = Instant::now();
            let mut log = AttemptLog {
                status: None,
                latency_ms: 0,
                error: None,
            };
            let outcome = self.attempt(&body, &mut log).await;
            log.latency_ms = millis(started.elapsed());
            attempts.push(log);
            match outcome {
                Attempt::Done(result) => return Outcome { result, attempts },
                Attempt::Retry { detail, reached } => {
                    ever_reached |= reached;
                    last = detail;
                }
            }
        }
        let count = attempts.len() as u32;
        warn!("{}: giving up after {count} attempts: {last}", request.id);
        let error = if ever_reached {
            LlmError::RetriesExhausted {
                attempts: count,
                detail: last,
            }
        } else {
            LlmError::EndpointUnreachable {
                attempts: count,
                detail: last,
            }
        };
        Outcome {
            result: Err(error),
            attempts,
        }
    }
}
