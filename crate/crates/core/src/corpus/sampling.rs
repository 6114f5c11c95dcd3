use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LabeledExample, UserDataset};
use crate::{Error, Result};

/// Draws `n` item ids uniformly without replacement from
/// `corpus_ids \ user_positive_ids`.
pub fn sample_negatives(
    user_id: &str,
    user_positive_ids: &BTreeSet<String>,
    corpus_ids: &BTreeSet<String>,
    n: usize,
    seed: u64,
) -> Result<BTreeSet<String>> {
    let candidates: Vec<&String> = corpus_ids.difference(user_positive_ids).collect();
    if candidates.len() < n {
        return Err(Error::InsufficientNegatives {
            user_id: user_id.to_string(),
            needed: n,
            available: candidates.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked: BTreeSet<String> = index::sample(&mut rng, candidates.len(), n)
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect();
    assert!(picked.is_disjoint(user_positive_ids));
    Ok(picked)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "split ratios must be positive, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split ratios must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub dataset: UserDataset,
    /// Set when validation or test came out empty because the user has too
    /// few examples.
    pub undersized: bool,
}

fn floor_count(n: usize, ratio: f64) -> usize {
    // The epsilon keeps products like 10 × 0.1 from landing just below an integer.
    ((n as f64) * ratio + 1e-9).floor() as usize
}

/// Shuffles under `seed` and cuts contiguous validation and test blocks of
/// `⌊n·r⌋` examples each; everything left over goes to train.
pub fn split_dataset(
    user_id: &str,
    mut examples: Vec<LabeledExample>,
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitResult> {
    ratios.validate()?;
    let n = examples.len();
    if n < 3 {
        return Ok(SplitResult {
            dataset: UserDataset::train_only(user_id, examples),
            undersized: true,
        });
    }
    examples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = floor_count(n, ratios.validation);
    let n_test = floor_count(n, ratios.test);
    let n_train = n - n_val - n_test;
    let test = examples.split_off(n_train + n_val);
    let validation = examples.split_off(n_train);
    Ok(SplitResult {
        undersized: validation.is_empty() || test.is_empty(),
        dataset: UserDataset {
            user_id: user_id.to_string(),
            train: examples,
            validation,
            test,
        },
    })
}
