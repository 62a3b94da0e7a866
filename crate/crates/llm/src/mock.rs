use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use async_trait::async_trait;

use crate::{AttemptLog, CompletionBackend, CompletionRequest, LlmError, Outcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockMode {
    /// Answers each request with the stored response for its id.
    EchoGold(BTreeMap<String, String>),
    /// Always answers with the empty string.
    Empty,
    /// Always fails as if the endpoint were down.
    Failing,
}

/// In-process backend that also records how many calls were in flight at
/// once.
pub struct MockBackend {
    mode: MockMode,
    delay: Duration,
    fail_ids: BTreeSet<String>,
    in_flight: AtomicUsize,
    high_water: AtomicUsize,
    calls: AtomicUsize,
}

impl MockBackend {
    pub fn new(mode: MockMode) -> Self {
        MockBackend {
            mode,
            delay: Duration::ZERO,
            fail_ids: BTreeSet::new(),
            in_flight: AtomicUsize::new(0),
            high_water: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
        }
    }

    /// Holds every call open for `delay`, so that overlapping calls show up
    /// in the high-water mark.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    /// Makes the given ids fail regardless of mode.
    pub fn failing_on(mut self, ids: impl IntoIterator<Item = String>) -> Self {
        self.fail_ids.extend(ids);
        self
    }

    pub fn high_water_mark(&self) -> usize {
        self.high_water.load(Ordering::SeqCst)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn failure(&self) -> Result<String, LlmError> {
        Err(LlmError::EndpointUnreachable {
            attempts: 1,
            detail: "mock failure".into(),
        })
    }
}

#[async_trait]
impl CompletionBackend for MockBackend {
    async fn complete(&self, request: &CompletionRequest) -> Outcome {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.high_water.fetch_max(now, Ordering::SeqCst);
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        } else {
            tokio::task::yield_now().await;
        }
        let result = if self.fail_ids.contains(&request.id) {
            self.failure()
        } else {
            match &self.mode {
                MockMode::EchoGold(answers) => {
                    Ok(answers.get(&request.id).cloned().unwrap_or_default())
                }
                MockMode::Empty => Ok(String::new()),
                MockMode::Failing => self.failure(),
            }
        };
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        let attempts = vec![AttemptLog {
            status: result.is_ok().then_some(200),
            latency_ms: crate::millis(self.delay),
            error: result.as_ref().err().map(|e| e.to_string()),
        }];
        Outcome { result, attempts }
    }
}
