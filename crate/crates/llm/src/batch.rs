use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use futures::stream::{self, StreamExt};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::{AttemptLog, CompletionBackend, CompletionRequest, LlmError};

/// Outcome for one batch item, as stored in the run directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<LlmError>,
    #[serde(default)]
    pub attempts: Vec<AttemptLog>,
    /// Read back from the run directory instead of requested.
    #[serde(skip)]
    pub resumed: bool,
}

/// Run directory layout: one `items/<id>.json` per successful item and an
/// append-only `requests.jsonl` log of every request made.
#[derive(Debug, Clone)]
pub struct ItemStore {
    root: PathBuf,
}

// Keeps `[A-Za-z0-9_-]` and percent-encodes every other byte, so any id maps
// to a distinct, portable file name.
fn file_stem(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for b in id.bytes() {
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'-' {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

impl ItemStore {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("items"))?;
        Ok(ItemStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn item_path(&self, id: &str) -> PathBuf {
        self.root
            .join("items")
            .join(format!("{}.json", file_stem(id)))
    }

    pub fn log_path(&self) -> PathBuf {
        self.root.join("requests.jsonl")
    }

    /// A previously stored successful result, if any.
    pub fn load(&self, id: &str) -> Option<ItemRecord> {
        let text = fs::read_to_string(self.item_path(id)).ok()?;
        match serde_json::from_str::<ItemRecord>(&text) {
            Ok(r) if r.id == id && r.raw.is_some() => Some(ItemRecord { resumed: true, ..r }),
            Ok(_) => None,
            Err(e) => {
                warn!("ignoring unreadable stored item {id}: {e}");
                None
            }
        }
    }

    fn save(&self, record: &ItemRecord) -> io::Result<()> {
        let path = self.item_path(&record.id);
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(record)?)?;
        fs::rename(tmp, path)
    }

    fn log(&self, record: &ItemRecord) -> io::Result<()> {
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.log_path())?;
        let line = serde_json::json!({
            "id": record.id,
            "ok": record.raw.is_some(),
            "attempts": record.attempts,
            "error": record.error,
        });
        writeln!(f, "{line}")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchOutcome {
    /// One record per request, in request order.
    pub records: Vec<ItemRecord>,
    /// Items sent to the backend in this run.
    pub requested: usize,
    /// Items answered from the store.
    pub resumed: usize,
}

impl BatchOutcome {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Completes every request with at most `max_in_flight` outstanding calls.
/// Per-item errors become error records; stored results are reused; only
/// successes are stored, so failed items are retried on the next run.
pub async fn run_batch(
    backend: &dyn CompletionBackend,
    requests: Vec<CompletionRequest>,
    max_in_flight: usize,
    store: Option<&ItemStore>,
) -> BatchOutcome {
    let total = requests.len();
    let results: Vec<ItemRecord> = stream::iter(requests)
        .map(|req| async move {
            if let Some(done) = store.and_then(|s| s.load(&req.id)) {
                return done;
            }
            let outcome = backend.complete(&req).await;
            let (raw, error) = match outcome.result {
                Ok(raw) => (Some(raw), None),
                Err(e) => (None, Some(e)),
            };
            let record = ItemRecord {
                id: req.id,
                raw,
                error,
                attempts: outcome.attempts,
                resumed: false,
            };
            if let Some(s) = store {
                if let Err(e) = s.log(&record) {
                    warn!("could not append to request log: {e}");
                }
                if record.raw.is_some() {
                    if let Err(e) = s.save(&record) {
                        warn!("could not store item {}: {e}", record.id);
                    }
                }
            }
            record
        })
        .buffered(max_in_flight.max(1))
        .collect()
        .await;

    let mut outcome = BatchOutcome::default();
    for r in &results {
        if r.resumed {
            outcome.resumed += 1;
        } else {
            outcome.requested += 1;
        }
    }
    info!(
        "batch of {total}: {} requested, {} resumed, {} failed",
        outcome.requested,
        outcome.resumed,
        results.iter().filter(|r| r.error.is_some()).count()
    );
    outcome.records = results;
    outcome
}
