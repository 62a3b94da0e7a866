use anaphora_core::corpus::{
    DatasetCounts, Rejection, PUBLISHED_PASSAGE_COUNTS, PUBLISHED_SENTENCE_COUNTS,
    PUBLISHED_WORD_COUNTS,
};
use anaphora_core::{CorefType, Dataset, Split};
use log::warn;
use serde::Serialize;

use crate::args::ValidateArgs;
use crate::error::CliError;
use crate::io::{load, write_json};
use crate::manifest::{beside, Manifest};

#[derive(Debug, Serialize)]
struct Comparison {
    split: Split,
    coref_type: CorefType,
    passages: usize,
    published_passages: usize,
    sentences: usize,
    published_sentences: usize,
    words: usize,
    published_words: usize,
}

#[derive(Debug, Serialize)]
struct DistanceStats {
    min: Option<i64>,
    max: Option<i64>,
    negative: usize,
    zero: usize,
    anaphor_in_antecedent: usize,
}

#[derive(Debug, Serialize)]
struct Summary {
    passages: usize,
    counts: DatasetCounts,
    comparison: Vec<Comparison>,
    published_match: bool,
    distance: DistanceStats,
    rejections: Vec<Rejection>,
}

fn published(table: &[(Split, usize, usize); 3], split: Split, coref: CorefType) -> usize {
    table
        .iter()
        .find(|(s, _, _)| *s == split)
        .map(|(_, g, t)| {
            if coref == CorefType::Grammatical {
                *g
            } else {
                *t
            }
        })
        .unwrap_or(0)
}

fn distance_stats(ds: &Dataset) -> DistanceStats {
    let d: Vec<i64> = ds.passages().iter().map(|p| p.metadata.distance).collect();
    DistanceStats {
        min: d.iter().copied().min(),
        max: d.iter().copied().max(),
        negative: d.iter().filter(|x| **x < 0).count(),
        zero: d.iter().filter(|x| **x == 0).count(),
        anaphor_in_antecedent: ds
            .passages()
            .iter()
            .filter(|p| p.metadata.anaphor_in_antecedent)
            .count(),
    }
}

pub fn run(args: ValidateArgs, mut manifest: Manifest) -> Result<(), CliError> {
    manifest.inputs(&args.data.data)?;
    let loaded = load(&args.data)?;
    let ds = &loaded.dataset;
    let counts = ds.counts();

    let mut comparison = Vec::new();
    for split in Split::ALL {
        if ds.split(split).next().is_none() {
            continue;
        }
        for coref in [CorefType::Grammatical, CorefType::Textual] {
            let t = counts.get(split, coref);
            comparison.push(Comparison {
                split,
                coref_type: coref,
                passages: t.passages,
                published_passages: published(&PUBLISHED_PASSAGE_COUNTS, split, coref),
                sentences: t.sentences,
                published_sentences: published(&PUBLISHED_SENTENCE_COUNTS, split, coref),
                words: t.words,
                published_words: published(&PUBLISHED_WORD_COUNTS, split, coref),
            });
        }
    }
    let published_match = !comparison.is_empty()
        && comparison
            .iter()
            .all(|c| c.passages == c.published_passages);

    println!(
        "{:<11} {:<12} {:>9} {:>9} {:>10} {:>10} {:>9} {:>9}",
        "split", "type", "passages", "published", "sentences", "published", "words", "published"
    );
    for c in &comparison {
        println!(
            "{:<11} {:<12} {:>9} {:>9} {:>10} {:>10} {:>9} {:>9}",
            c.split.as_str(),
            c.coref_type.as_str(),
            c.passages,
            c.published_passages,
            c.sentences,
            c.published_sentences,
            c.words,
            c.published_words
        );
    }
    let distance = distance_stats(ds);
    println!(
        "distance: min {} max {}, {} negative (cataphora), {} zero, {} anaphor inside antecedent",
        distance.min.map_or("-".into(), |v| v.to_string()),
        distance.max.map_or("-".into(), |v| v.to_string()),
        distance.negative,
        distance.zero,
        distance.anaphor_in_antecedent
    );
    println!(
        "passages: {}, rejected records: {}",
        ds.len(),
        loaded.rejections.len()
    );
    for r in &loaded.rejections {
        println!(
            "  line {} ({}): {}",
            r.line,
            r.id.as_deref().unwrap_or("no id"),
            r.reason
        );
    }
    if ds.is_empty() && loaded.rejections.is_empty() {
        warn!("no passages found in the given files");
        println!("warning: no passages found");
    }

    let summary = Summary {
        passages: ds.len(),
        counts: counts.clone(),
        comparison,
        published_match,
        distance,
        rejections: loaded.rejections.clone(),
    };
    if let Some(out) = &args.out {
        write_json(out, &summary)?;
        manifest.output(out);
        manifest.summary = serde_json::to_value(&summary).unwrap_or_default();
        manifest.finish(&beside(out))?;
    }

    if !loaded.rejections.is_empty() {
        return Err(CliError::invalid(format!(
            "{} record(s) rejected",
            loaded.rejections.len()
        )));
    }
    if args.expect_published && !published_match {
        return Err(CliError::invalid(
            "passage counts differ from the published dataset statistics",
        ));
    }
    if args.expect_published {
        println!("passage counts match the published statistics");
    }
    Ok(())
}
