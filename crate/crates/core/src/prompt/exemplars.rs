use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Label, SHOT_COUNTS};
use crate::corpus::{CorefType, Dataset, Passage, Split};
use crate::scorer::{score_answer_string, tokenize};
use crate::text::char_slice;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExemplarError {
    #[error("shot count {0} is not one of 0, 1, 3")]
    BadShotCount(usize),
    #[error("need {needed} training exemplars ({detail}), found {available}")]
    InsufficientExemplars {
        needed: usize,
        available: usize,
        detail: &'static str,
    },
    #[error("negative ratio {0} is outside [0, 1]")]
    BadRatio(f64),
}

/// Draws `k` exemplars from the training split, never one whose id is in
/// `exclude`. Three exemplars always mix grammatical and textual passages.
/// The draw depends only on the seed and the set of eligible ids.
pub fn select_exemplars<'a>(
    dataset: &'a Dataset,
    k: usize,
    seed: u64,
    exclude: &BTreeSet<String>,
) -> Result<Vec<&'a Passage>, ExemplarError> {
    if !SHOT_COUNTS.contains(&k) {
        return Err(ExemplarError::BadShotCount(k));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut pool: Vec<&Passage> = dataset
        .split(Split::Train)
        .filter(|p| !exclude.contains(&p.id))
        .collect();
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    if pool.len() < k {
        return Err(ExemplarError::InsufficientExemplars {
            needed: k,
            available: pool.len(),
            detail: "training split",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if k == 1 {
        return Ok(vec![*pool.choose(&mut rng).expect("non-empty pool")]);
    }

    let of_type = |t: CorefType| -> Vec<&'a Passage> {
        pool.iter()
            .copied()
            .filter(|p| p.metadata.coref_type == t)
            .collect()
    };
    let grammatical = of_type(CorefType::Grammatical);
    let textual = of_type(CorefType::Textual);
    let (Some(g), Some(t)) = (
        grammatical.choose(&mut rng).copied(),
        textual.choose(&mut rng).copied(),
    ) else {
        return Err(ExemplarError::InsufficientExemplars {
            needed: k,
            available: grammatical.len().min(textual.len()),
            detail: "both grammatical and textual",
        });
    };
    let rest: Vec<&Passage> = pool
        .iter()
        .copied()
        .filter(|p| p.id != g.id && p.id != t.id)
        .collect();
    let third = *rest.choose(&mut rng).expect("pool has at least three");
    let mut chosen = vec![g, t, third];
    chosen.shuffle(&mut rng);
    Ok(chosen)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YesNoItem {
    pub passage_id: String,
    pub candidate: String,
    pub expected_label: Label,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct YesNoPairs {
    /// One item per input passage, in input order.
    pub items: Vec<YesNoItem>,
    /// Passages drawn for a negative item that had no usable distractor;
    /// they keep their positive item.
    pub no_distractor: Vec<String>,
}

/// Single-token distractors from the passage whose surface form scores
/// incorrect under the relaxed metric.
fn distractors(p: &Passage) -> Vec<String> {
    let tokens = tokenize(&p.text);
    let mut seen = BTreeSet::new();
    tokens
        .spans()
        .iter()
        .filter(|s| !s.overlaps(&p.anaphor))
        .map(|s| char_slice(&p.text, *s))
        .filter(|w| w.chars().any(char::is_alphanumeric) && *w != p.anaphor_surface)
        .filter(|w| !score_answer_string(w, p, &tokens).is_correct())
        .filter(|w| seen.insert(w.to_string()))
        .map(str::to_string)
        .collect()
}

/// Builds Yes/No items: the gold subtree as a YES candidate, or for
/// `round(negative_ratio * n)` seeded passages a distractor as a NO candidate.
pub fn make_yesno_pairs(
    passages: &[&Passage],
    negative_ratio: f64,
    seed: u64,
) -> Result<YesNoPairs, ExemplarError> {
    if !(0.0..=1.0).contains(&negative_ratio) {
        return Err(ExemplarError::BadRatio(negative_ratio));
    }
    let wanted = (negative_ratio * passages.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..passages.len()).collect();
    order.shuffle(&mut rng);

    let mut negative: Vec<Option<String>> = vec![None; passages.len()];
    let mut no_distractor = Vec::new();
    let mut made = 0;
    for i in order {
        if made == wanted {
            break;
        }
        match distractors(passages[i]).choose(&mut rng) {
            Some(d) => {
                negative[i] = Some(d.clone());
                made += 1;
            }
            None => no_distractor.push(passages[i].id.clone()),
        }
    }

    let items = passages
        .iter()
        .zip(negative)
        .map(|(p, neg)| match neg {
            Some(candidate) => YesNoItem {
                passage_id: p.id.clone(),
                candidate,
                expected_label: Label::No,
            },
            None => YesNoItem {
                passage_id: p.id.clone(),
                candidate: p.subtree_text().to_string(),
                expected_label: Label::Yes,
            },
        })
        .collect();
    Ok(YesNoPairs {
        items,
        no_distractor,
    })
}
