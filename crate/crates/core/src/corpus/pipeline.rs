use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::{info, warn};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{sample_negatives, split_dataset, SplitRatios};
use super::tokenize::TokenizerOptions;
use super::vocab::{build_vocabulary, vectorize, Vocabulary};
use super::{DatasetBundle, Document, Label, LabeledExample, SparseVector};
use crate::rng::{substream, SAMPLING, SPLIT};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub min_df: usize,
    pub ratios: SplitRatios,
    pub seed: u64,
    pub tokenizer: TokenizerOptions,
    /// Append a constant feature to every vector (acts as an intercept).
    pub bias: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            min_df: 50,
            ratios: SplitRatios::default(),
            seed: 0,
            tokenizer: TokenizerOptions::default(),
            bias: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub users: usize,
    pub items: usize,
    pub features: usize,
    pub examples: usize,
    pub skipped_users: usize,
    pub unknown_interactions: usize,
    pub undersized_users: usize,
}

#[derive(Debug, Clone)]
pub struct IngestOutput {
    pub vocabulary: Vocabulary,
    pub datasets: DatasetBundle,
    pub summary: IngestSummary,
}

/// Full corpus pipeline: vocabulary, TF-IDF vectors, one sampled negative per
/// positive, then a per-user split of the pooled examples.
///
/// Users are processed in lexicographic id order; user `i` draws from random
/// substream `i`, so outputs depend only on the inputs and the seed.
pub fn ingest(
    docs: &[Document],
    interactions: &[(String, String)],
    opts: &IngestOptions,
) -> Result<IngestOutput> {
    opts.ratios.validate()?;
    let vocabulary = build_vocabulary(docs, opts.min_df, opts.tokenizer)?;
    let k = vocabulary.len();
    let num_features = if opts.bias { k + 1 } else { k };

    let vectors: HashMap<&str, SparseVector> = docs
        .par_iter()
        .map(|d| {
            let x = vectorize(d, &vocabulary);
            let x = if opts.bias { x.with_bias(k) } else { x };
            (d.id.as_str(), x)
        })
        .collect();
    let corpus_ids: BTreeSet<String> = docs.iter().map(|d| d.id.clone()).collect();

    let mut positives: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut unknown = 0usize;
    for (user, item) in interactions {
        let entry = positives.entry(user.as_str()).or_default();
        if corpus_ids.contains(item) {
            entry.insert(item.clone());
        } else {
            unknown += 1;
        }
    }
    if unknown > 0 {
        warn!("{unknown} interactions reference items missing from the documents file");
    }

    let mut users = Vec::new();
    let mut skipped = 0usize;
    let mut undersized = 0usize;
    for (index, (user_id, pos)) in positives.iter().enumerate() {
        if pos.is_empty() {
            skipped += 1;
            continue;
        }
        let sample_seed = substream(opts.seed, SAMPLING, index as u64).next_u64();
        let neg = sample_negatives(user_id, pos, &corpus_ids, pos.len(), sample_seed)?;
        let examples: Vec<LabeledExample> = pos
            .iter()
            .map(|id| (id, Label::Positive))
            .chain(neg.iter().map(|id| (id, Label::Negative)))
            .map(|(id, label)| LabeledExample::new(id.clone(), vectors[id.as_str()].clone(), label))
            .collect();
        let split_seed = substream(opts.seed, SPLIT, index as u64).next_u64();
        let split = split_dataset(user_id, examples, opts.ratios, split_seed)?;
        if split.undersized {
            undersized += 1;
        }
        users.push(split.dataset);
    }
    if skipped > 0 {
        warn!("skipped {skipped} users with no positive examples in the corpus");
    }

    let summary = IngestSummary {
        users: users.len(),
        items: docs.len(),
        features: num_features,
        examples: users.iter().map(|u| u.all_examples().count()).sum(),
        skipped_users: skipped,
        unknown_interactions: unknown,
        undersized_users: undersized,
    };
    info!(
        "ingested {} users, {} items, {} features, {} examples",
        summary.users, summary.items, summary.features, summary.examples
    );
    let fingerprint = vocabulary.fingerprint();
    Ok(IngestOutput {
        datasets: DatasetBundle::new(num_features, fingerprint, users),
        vocabulary,
        summary,
    })
}
