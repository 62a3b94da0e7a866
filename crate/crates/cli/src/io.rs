use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anaphora_core::corpus::{load_splits, AliasTable, LoadError, LoadOptions, LoadReport};
use anyhow::Context;
use log::warn;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::args::DataArgs;
use crate::error::{CliError, ErrorKind, OrExit};

pub fn load_options(strict: bool, aliases: Option<&Path>) -> Result<LoadOptions, CliError> {
    let mut options = LoadOptions {
        strict,
        ..LoadOptions::default()
    };
    if let Some(path) = aliases {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read alias table {}", path.display()))
            .or_config()?;
        options.aliases = AliasTable::from_json_str(&text)
            .map_err(|e| CliError::config(format!("alias table {}: {e}", path.display())))?;
    }
    Ok(options)
}

/// Loads all dataset files. Rejections are logged; strict mode turns them
/// into a validation error.
pub fn load(data: &DataArgs) -> Result<LoadReport, CliError> {
    load_paths(&data.data, data.strict, data.aliases.as_deref())
}

pub fn load_paths(
    paths: &[std::path::PathBuf],
    strict: bool,
    aliases: Option<&Path>,
) -> Result<LoadReport, CliError> {
    for p in paths {
        if !p.is_file() {
            return Err(CliError::config(format!(
                "dataset file {} does not exist",
                p.display()
            )));
        }
    }
    let options = load_options(strict, aliases)?;
    let report = load_splits(paths, &options).map_err(|e| match e {
        LoadError::Rejected(ref list) => {
            for r in list.iter().take(20) {
                eprintln!("rejected line {}: {}", r.line, r.reason);
            }
            CliError::new(ErrorKind::Validation, e)
        }
        other => CliError::new(ErrorKind::Config, other),
    })?;
    for r in &report.rejections {
        warn!(
            "rejected line {} ({}): {}",
            r.line,
            r.id.as_deref().unwrap_or("no id"),
            r.reason
        );
    }
    Ok(report)
}

/// Reads JSON lines, skipping blank lines.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .or_config()?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line
            .with_context(|| format!("cannot read {}", path.display()))
            .or_config()?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: invalid record", path.display(), i + 1))
            .or_invalid()?;
        out.push(item);
    }
    Ok(out)
}

fn create_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .or_config()?;
    }
    Ok(())
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<(), CliError> {
    create_parent(path)?;
    let ctx = || format!("cannot write {}", path.display());
    let mut w = BufWriter::new(File::create(path).with_context(ctx).or_config()?);
    for item in items {
        serde_json::to_writer(&mut w, item)
            .with_context(ctx)
            .or_config()?;
        w.write_all(b"\n").with_context(ctx).or_config()?;
    }
    w.flush().with_context(ctx).or_config()
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    create_parent(path)?;
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .or_config()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).or_config()?;
    write_text(path, &(text + "\n"))
}
