use std::collections::BTreeSet;

use anaphora_core::prompt::{
    make_yesno_pairs, render, render_yes_no, select_exemplars, Label, PromptInstance, Strategy,
};
use anaphora_core::{Dataset, Split};
use serde_json::{json, Value};

use crate::args::PromptCmd;
use crate::error::{CliError, OrExit};
use crate::io::{load, write_jsonl};
use crate::manifest::{beside, Manifest};

pub struct PromptPlan {
    pub split: Split,
    pub strategy: Strategy,
    pub shots: usize,
    pub seed: u64,
    pub negative_ratio: f64,
    pub limit: Option<usize>,
}

/// Renders one prompt per passage of the split. The exemplar set is drawn
/// once per plan; Yes/No candidates come from the seeded pair builder.
pub fn build_prompts(
    ds: &Dataset,
    plan: &PromptPlan,
) -> Result<(Vec<PromptInstance>, Value), CliError> {
    let mut passages: Vec<_> = ds.split(plan.split).collect();
    if let Some(n) = plan.limit {
        passages.truncate(n);
    }
    if passages.is_empty() {
        log::warn!("split {} has no passages", plan.split);
    }
    match plan.strategy {
        Strategy::YesNo => {
            if plan.shots != 0 {
                return Err(CliError::config("yes/no prompts are zero-shot only"));
            }
            let pairs = make_yesno_pairs(&passages, plan.negative_ratio, plan.seed).or_config()?;
            let prompts = passages
                .iter()
                .zip(&pairs.items)
                .map(|(p, item)| render_yes_no(p, &item.candidate, item.expected_label))
                .collect::<Result<Vec<_>, _>>()
                .or_config()?;
            let negatives = prompts
                .iter()
                .filter(|p| p.expected_label == Some(Label::No))
                .count();
            Ok((
                prompts,
                json!({ "negatives": negatives, "no_distractor": pairs.no_distractor }),
            ))
        }
        strategy => {
            let exclude: BTreeSet<String> = passages.iter().map(|p| p.id.clone()).collect();
            let exemplars = select_exemplars(ds, plan.shots, plan.seed, &exclude).or_config()?;
            let prompts = passages
                .iter()
                .map(|p| render(strategy, p, &exemplars, None))
                .collect::<Result<Vec<_>, _>>()
                .or_config()?;
            let ids: Vec<_> = exemplars.iter().map(|e| e.id.clone()).collect();
            Ok((prompts, json!({ "exemplar_ids": ids })))
        }
    }
}

pub fn run(cmd: PromptCmd, mut manifest: Manifest) -> Result<(), CliError> {
    let PromptCmd::Render {
        data,
        split,
        strategy,
        shots,
        seed,
        negative_ratio,
        limit,
        out,
    } = cmd;
    manifest.inputs(&data.data)?;
    manifest.seed = Some(seed);
    let ds = load(&data)?.dataset;
    let plan = PromptPlan {
        split,
        strategy,
        shots,
        seed,
        negative_ratio,
        limit,
    };
    let (prompts, summary) = build_prompts(&ds, &plan)?;
    write_jsonl(&out, &prompts)?;
    manifest.output(&out);
    manifest.summary = summary;
    manifest.finish(&beside(&out))?;
    println!(
        "{} {strategy} prompts written to {}",
        prompts.len(),
        out.display()
    );
    Ok(())
}
