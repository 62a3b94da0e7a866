use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anaphora_core::prompt::{gold_answer, Label, Strategy};
use anaphora_core::report::Format;
use anaphora_core::response::{score_parsed, Leniency, ResponseKind};
use anaphora_core::scorer::tokenize;
use anaphora_core::{Dataset, Split};
use anaphora_llm::{
    run_batch, CompletionBackend, CompletionRequest, EndpointConfig, HttpBackend, ItemStore,
    MockBackend, MockMode,
};
use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::parse::ParsedRecord;
use super::prompt::{build_prompts, PromptPlan};
use super::{fmt_rate, write_reports, ScoreRecord};
use crate::args::{MockArg, RunArgs};
use crate::error::{CliError, ErrorKind, OrExit};
use crate::io::{load_paths, write_json, write_jsonl};
use crate::manifest::Manifest;

fn default_split() -> Split {
    Split::Test
}

fn default_seed() -> u64 {
    13
}

/// Fully resolved configuration of one prompting experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: Vec<PathBuf>,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub aliases: Option<PathBuf>,
    #[serde(default = "default_split")]
    pub split: Split,
    pub strategy: Strategy,
    #[serde(default)]
    pub shots: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub negative_ratio: f64,
    #[serde(default)]
    pub limit: Option<usize>,
    #[serde(default)]
    pub strict_parse: bool,
    pub run_dir: PathBuf,
    #[serde(default)]
    pub mock: Option<MockArg>,
    pub endpoint: EndpointConfig,
}

fn set<T: Serialize>(map: &mut Map<String, Value>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        map.insert(key.to_string(), serde_json::to_value(v).unwrap_or_default());
    }
}

impl RunConfig {
    /// Merges the optional JSON config file with command-line flags (flags
    /// win) and checks the result.
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let mut map = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))
                    .or_config()?;
                match serde_json::from_str::<Value>(&text)
                    .with_context(|| format!("invalid config {}", path.display()))
                    .or_config()?
                {
                    Value::Object(m) => m,
                    _ => return Err(CliError::config("config file must hold a JSON object")),
                }
            }
            None => Map::new(),
        };
        set(&mut map, "data", Some(&args.data).filter(|d| !d.is_empty()));
        set(&mut map, "strict", args.strict.then_some(true));
        set(&mut map, "aliases", args.aliases.as_ref());
        set(&mut map, "split", args.split);
        set(&mut map, "strategy", args.strategy);
        set(&mut map, "shots", args.shots);
        set(&mut map, "seed", args.seed);
        set(&mut map, "negative_ratio", args.negative_ratio);
        set(&mut map, "limit", args.limit);
        set(&mut map, "strict_parse", args.strict_parse.then_some(true));
        set(&mut map, "run_dir", args.run_dir.as_ref());
        set(&mut map, "mock", args.mock);

        let mut endpoint = match map.remove("endpoint") {
            Some(Value::Object(m)) => m,
            None | Some(Value::Null) => Map::new(),
            Some(_) => return Err(CliError::config("\"endpoint\" must be a JSON object")),
        };
        set(&mut endpoint, "base_url", args.base_url.as_ref());
        set(&mut endpoint, "model_id", args.model.as_ref());
        set(&mut endpoint, "temperature", args.temperature);
        set(&mut endpoint, "max_output_tokens", args.max_tokens);
        set(&mut endpoint, "request_timeout", args.timeout);
        set(&mut endpoint, "max_retries", args.max_retries);
        set(&mut endpoint, "max_in_flight", args.max_in_flight);
        set(&mut endpoint, "api_key_env", args.api_key_env.as_ref());
        if let Some(mock) = map.get("mock").and_then(Value::as_str).map(str::to_string) {
            endpoint
                .entry("base_url")
                .or_insert_with(|| json!("http://mock.invalid/v1"));
            endpoint
                .entry("model_id")
                .or_insert_with(|| json!(format!("mock-{mock}")));
        }
        map.insert("endpoint".into(), Value::Object(endpoint));

        let config: RunConfig = serde_json::from_value(Value::Object(map))
            .context("invalid run configuration")
            .or_config()?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.data.is_empty() {
            return Err(CliError::config("no dataset files given"));
        }
        for p in self.data.iter().chain(&self.aliases) {
            if !p.is_file() {
                return Err(CliError::config(format!("{} does not exist", p.display())));
            }
        }
        if !(0.0..=1.0).contains(&self.negative_ratio) {
            return Err(CliError::config("negative_ratio must lie in [0, 1]"));
        }
        self.endpoint.validate().or_config()
    }

    /// `<run_dir>/<strategy>-<shots>shot-<model>`.
    pub fn experiment_dir(&self) -> PathBuf {
        let model: String = self
            .endpoint
            .model_id
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || "._-".contains(c) {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        self.run_dir
            .join(format!("{}-{}shot-{model}", self.strategy, self.shots))
    }

    /// Fields that change prompt content; a stored run may only be resumed
    /// when they agree.
    fn identity(&self) -> Value {
        json!({
            "split": self.split,
            "strategy": self.strategy,
            "shots": self.shots,
            "seed": self.seed,
            "negative_ratio": self.negative_ratio,
            "model_id": self.endpoint.model_id,
            "temperature": self.endpoint.temperature,
            "max_output_tokens": self.endpoint.max_output_tokens,
        })
    }
}

fn mock_answer(strategy: Strategy, expected: Option<Label>, gold: String) -> String {
    match strategy {
        Strategy::YesNo => expected.unwrap_or(Label::Yes).to_string(),
        _ => format!("[{gold}]"),
    }
}

fn check_resumable(dir: &Path, config: &RunConfig) -> Result<(), CliError> {
    let path = dir.join("identity.json");
    let identity = config.identity();
    match std::fs::read_to_string(&path) {
        Ok(text) => {
            let stored: Value = serde_json::from_str(&text).unwrap_or_default();
            if stored != identity {
                return Err(CliError::config(format!(
                    "{} holds a run with a different configuration ({stored}); use another run_dir",
                    dir.display()
                )));
            }
            Ok(())
        }
        Err(_) => write_json(&path, &identity),
    }
}

pub fn run(args: RunArgs, mut manifest: Manifest) -> Result<(), CliError> {
    let config = RunConfig::resolve(&args)?;
    manifest.config = serde_json::to_value(&config).unwrap_or_default();
    manifest.seed = Some(config.seed);
    manifest.inputs(&config.data)?;

    let ds: Dataset = load_paths(&config.data, config.strict, config.aliases.as_deref())?.dataset;
    let plan = PromptPlan {
        split: config.split,
        strategy: config.strategy,
        shots: config.shots,
        seed: config.seed,
        negative_ratio: config.negative_ratio,
        limit: config.limit,
    };
    let (prompts, prompt_summary) = build_prompts(&ds, &plan)?;

    let dir = config.experiment_dir();
    let store = ItemStore::open(&dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .or_config()?;
    check_resumable(&dir, &config)?;
    let prompts_path = dir.join("prompts.jsonl");
    write_jsonl(&prompts_path, &prompts)?;
    manifest.output(&prompts_path);

    let backend: Box<dyn CompletionBackend> = match config.mock {
        Some(MockArg::EchoGold) => {
            let answers = prompts
                .iter()
                .map(|p| {
                    let passage = ds.get(&p.passage_id).expect("prompt for a loaded passage");
                    let gold = gold_answer(config.strategy, passage);
                    (
                        p.passage_id.clone(),
                        mock_answer(config.strategy, p.expected_label, gold),
                    )
                })
                .collect();
            Box::new(MockBackend::new(MockMode::EchoGold(answers)))
        }
        Some(MockArg::Empty) => Box::new(MockBackend::new(MockMode::Empty)),
        None => Box::new(HttpBackend::new(config.endpoint.clone()).or_config()?),
    };
    let requests: Vec<CompletionRequest> = prompts
        .iter()
        .map(|p| CompletionRequest {
            id: p.passage_id.clone(),
            prompt: p.rendered.clone(),
        })
        .collect();
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("cannot start async runtime")
        .or_config()?;
    let outcome = runtime.block_on(run_batch(
        backend.as_ref(),
        requests,
        config.endpoint.max_in_flight,
        Some(&store),
    ));

    let responses_path = dir.join("responses.jsonl");
    write_jsonl(&responses_path, &outcome.records)?;
    manifest.output(&responses_path);

    let mode = if config.strict_parse {
        Leniency::Strict
    } else {
        Leniency::Lenient
    };
    let mut parsed = Vec::with_capacity(prompts.len());
    let mut scores = Vec::with_capacity(prompts.len());
    for (p, record) in prompts.iter().zip(&outcome.records) {
        let passage = ds.get(&p.passage_id).expect("prompt for a loaded passage");
        let rec = ParsedRecord::from_raw(
            config.strategy,
            &p.passage_id,
            record.raw.as_deref(),
            mode,
            p.expected_label,
        );
        let result = score_parsed(
            rec.response().as_ref(),
            passage,
            &tokenize(&passage.text),
            p.expected_label,
        );
        scores.push(ScoreRecord {
            id: p.passage_id.clone(),
            result,
        });
        parsed.push(rec);
    }
    let parsed_path = dir.join("parsed.jsonl");
    let scores_path = dir.join("scores.jsonl");
    write_jsonl(&parsed_path, &parsed)?;
    write_jsonl(&scores_path, &scores)?;
    manifest.output(&parsed_path);
    manifest.output(&scores_path);

    let meta = BTreeMap::from([
        ("strategy".to_string(), config.strategy.to_string()),
        ("shots".to_string(), config.shots.to_string()),
        ("model".to_string(), config.endpoint.model_id.clone()),
        ("split".to_string(), config.split.to_string()),
        ("seed".to_string(), config.seed.to_string()),
    ]);
    let report = write_reports(&dir, &scores, &ds, meta, &Format::ALL, &mut manifest)?;

    let yes = parsed
        .iter()
        .filter(|r| r.kind == Some(ResponseKind::Yes))
        .count();
    let failures = outcome.failures();
    manifest.summary = json!({
        "prompts": prompts.len(),
        "requested": outcome.requested,
        "resumed": outcome.resumed,
        "failed_requests": failures,
        "accuracy": report.accuracy(),
        "format_error_rate": report.format_error_rate(),
        "yes_responses": yes,
        "prompt_set": prompt_summary,
    });
    manifest.finish(&dir.join("manifest.json"))?;
    println!(
        "{}: accuracy {} over {} passages ({} requested, {} resumed, {} failed) in {}",
        config.strategy,
        fmt_rate(report.accuracy()),
        prompts.len(),
        outcome.requested,
        outcome.resumed,
        failures,
        dir.display()
    );
    if failures > 0 {
        let first = outcome
            .records
            .iter()
            .find_map(|r| r.error.as_ref())
            .map(|e| e.to_string())
            .unwrap_or_default();
        return Err(CliError::new(
            ErrorKind::Endpoint,
            anyhow::anyhow!("{failures} request(s) failed (first: {first}); rerun to resume"),
        ));
    }
    Ok(())
}
