//! Text corpus ingestion: tokenization, vocabulary, TF-IDF feature vectors,
//! negative sampling and per-user train/validation/test splits.

mod io;
mod pipeline;
mod sampling;
mod tokenize;
mod vocab;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use io::{
    read_datasets, read_documents, read_interactions, read_vocabulary, write_datasets,
    write_json_pretty, write_vectors_jsonl, write_vocabulary, VectorRecord,
};
pub use pipeline::{ingest, IngestOptions, IngestOutput, IngestSummary};
pub use sampling::{sample_negatives, split_dataset, SplitRatios, SplitResult};
pub use tokenize::{is_stop_word, tokenize, tokenize_with, TokenizerOptions, STOP_WORDS_VERSION};
pub use vocab::{build_vocabulary, vectorize, TermEntry, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

/// Sparse feature vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, f64)>", into = "Vec<(usize, f64)>")]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn empty() -> Self {
        SparseVector::default()
    }

    /// Builds from entries already sorted by index. Zero weights are dropped.
    pub fn from_sorted(entries: Vec<(usize, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "sparse indices not strictly increasing: {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(i, v)) = entries.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite sparse weight {v} at index {i}"
            )));
        }
        Ok(SparseVector {
            entries: entries.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        })
    }

    /// Builds from a dense slice, keeping the nonzero entries.
    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One past the largest stored index (0 when empty).
    pub fn min_dim(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i + 1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    /// `out += alpha * self`
    pub fn add_scaled_to(&self, alpha: f64, out: &mut [f64]) {
        for &(i, v) in &self.entries {
            out[i] += alpha * v;
        }
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for e in &mut self.entries {
                e.1 /= n;
            }
        }
        self
    }

    /// Appends a constant feature at index `dim`.
    pub fn with_bias(&self, dim: usize) -> Self {
        debug_assert!(self.min_dim() <= dim);
        let mut entries = self.entries.clone();
        entries.push((dim, 1.0));
        SparseVector { entries }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.add_scaled_to(1.0, &mut out);
        out
    }
}

impl TryFrom<Vec<(usize, f64)>> for SparseVector {
    type Error = Error;

    fn try_from(entries: Vec<(usize, f64)>) -> Result<Self> {
        SparseVector::from_sorted(entries)
    }
}

impl From<SparseVector> for Vec<(usize, f64)> {
    fn from(v: SparseVector) -> Self {
        v.entries
    }
}

/// Binary relevance label, stored as +1 / −1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(format!("label must be +1 or -1, got {other}")),
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub item_id: String,
    pub features: SparseVector,
    pub label: Label,
}

impl LabeledExample {
    pub fn new(item_id: impl Into<String>, features: SparseVector, label: Label) -> Self {
        LabeledExample {
            item_id: item_id.into(),
            features,
            label,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserDataset {
    pub user_id: String,
    pub train: Vec<LabeledExample>,
    pub validation: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

impl UserDataset {
    pub fn train_only(user_id: impl Into<String>, train: Vec<LabeledExample>) -> Self {
        UserDataset {
            user_id: user_id.into(),
            train,
            ..Default::default()
        }
    }

    pub fn n_train_positives(&self) -> usize {
        self.train.iter().filter(|e| e.label.is_positive()).count()
    }

    pub fn all_examples(&self) -> impl Iterator<Item = &LabeledExample> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }

    /// Largest feature dimension referenced by any example.
    pub fn min_dim(&self) -> usize {
        self.all_examples()
            .map(|e| e.features.min_dim())
            .max()
            .unwrap_or(0)
    }
}

/// All users' datasets over one shared feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub format_version: u32,
    pub num_features: usize,
    pub vocab_fingerprint: String,
    pub users: Vec<UserDataset>,
}

impl DatasetBundle {
    pub fn new(num_features: usize, vocab_fingerprint: String, users: Vec<UserDataset>) -> Self {
        DatasetBundle {
            format_version: 1,
            num_features,
            vocab_fingerprint,
            users,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for u in &self.users {
            let d = u.min_dim();
            if d > self.num_features {
                return Err(Error::DimensionMismatch {
                    what: format!("feature index of user {}", u.user_id),
                    expected: self.num_features,
                    actual: d,
                });
            }
        }
        Ok(())
    }
}
