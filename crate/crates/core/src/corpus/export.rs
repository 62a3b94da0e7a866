use serde::{Deserialize, Serialize};

use super::{Dataset, Split};

/// A sequence-to-sequence training pair: the passage with the anaphor
/// tagged, and the same passage with the antecedent tagged as well.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetunePair {
    pub input: String,
    pub target: String,
}

/// One pair per passage of `split`, in dataset order.
pub fn export_finetune_pairs(dataset: &Dataset, split: Split) -> Vec<FinetunePair> {
    dataset
        .split(split)
        .map(|p| FinetunePair {
            input: p.sentence_ana(),
            target: p.sentence_ant_ana(),
        })
        .collect()
}
