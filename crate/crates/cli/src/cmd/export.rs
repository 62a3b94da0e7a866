use anaphora_core::corpus::export_finetune_pairs;

use crate::args::ExportArgs;
use crate::error::CliError;
use crate::io::{load, write_jsonl};
use crate::manifest::{beside, Manifest};

pub fn run(args: ExportArgs, mut manifest: Manifest) -> Result<(), CliError> {
    manifest.inputs(&args.data.data)?;
    let ds = load(&args.data)?.dataset;
    let pairs = export_finetune_pairs(&ds, args.split);
    write_jsonl(&args.out, &pairs)?;
    manifest.output(&args.out);
    manifest.summary = serde_json::json!({ "pairs": pairs.len() });
    manifest.finish(&beside(&args.out))?;
    println!("{} pairs written to {}", pairs.len(), args.out.display());
    Ok(())
}
