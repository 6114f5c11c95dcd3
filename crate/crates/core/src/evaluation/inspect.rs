use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{UserDataset, Vocabulary};
use crate::models::{FactorMatrix, ModelState, Variant};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermWeight {
    pub term: String,
    pub weight: f64,
}

/// Top terms of one factor column.
pub type FactorReport = Vec<TermWeight>;

/// Display names for `k` features: vocabulary terms, `<bias>` for an appended
/// constant feature, `f{index}` when there is no vocabulary.
pub fn feature_names(vocab: Option<&Vocabulary>, k: usize) -> Result<Vec<String>> {
    match vocab {
        None => Ok((0..k).map(|i| format!("f{i}")).collect()),
        Some(v) if v.len() == k => Ok(v.terms.iter().map(|t| t.term.clone()).collect()),
        Some(v) if v.len() + 1 == k => Ok(v
            .terms
            .iter()
            .map(|t| t.term.clone())
            .chain(std::iter::once("<bias>".to_string()))
            .collect()),
        Some(v) => Err(Error::DimensionMismatch {
            what: "vocabulary size".into(),
            expected: k,
            actual: v.len(),
        }),
    }
}

/// For each factor, the `n` features with the largest weight (descending,
/// ties by lower index). `n > K` returns all `K`.
pub fn top_factor_features(factors: &FactorMatrix, names: &[String], n: usize) -> Result<Vec<FactorReport>> {
    let k = factors.num_features();
    if names.len() != k {
        return Err(Error::DimensionMismatch {
            what: "feature names".into(),
            expected: k,
            actual: names.len(),
        });
    }
    Ok((0..factors.num_factors())
        .map(|c| {
            let col = factors.column(c);
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| col[b].total_cmp(&col[a]).then(a.cmp(&b)));
            order
                .into_iter()
                .take(n)
                .map(|i| TermWeight {
                    term: names[i].clone(),
                    weight: col[i],
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemCount {
    pub item_id: String,
    pub users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterItems {
    pub cluster: usize,
    pub size: usize,
    pub items: Vec<ItemCount>,
}

/// For each cluster of a DFPM-Mult model, items ranked by how many cluster
/// members have them as positives (all splits), ties by item id.
pub fn top_items_per_cluster(state: &ModelState, data: &[UserDataset]) -> Result<Vec<ClusterItems>> {
    if !matches!(state.variant, Variant::DfpmMult | Variant::Bhlr) {
        return Err(Error::Unsupported(format!(
            "{} models have no user clusters",
            state.variant
        )));
    }
    let h = state.factors.as_ref().map_or(0, FactorMatrix::num_factors);
    let mut counts: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); h];
    let mut sizes = vec![0usize; h];
    for user in data {
        let Some(cluster) = state.profile(&user.user_id).and_then(|p| p.cluster) else {
            continue;
        };
        sizes[cluster] += 1;
        let mut seen = std::collections::BTreeSet::new();
        for ex in user.all_examples().filter(|e| e.label.is_positive()) {
            if seen.insert(ex.item_id.as_str()) {
                *counts[cluster].entry(ex.item_id.as_str()).or_default() += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .zip(sizes)
        .enumerate()
        .map(|(cluster, (items, size))| {
            let mut items: Vec<ItemCount> = items
                .into_iter()
                .map(|(id, users)| ItemCount {
                    item_id: id.to_string(),
                    users,
                })
                .collect();
            items.sort_by(|a, b| b.users.cmp(&a.users).then_with(|| a.item_id.cmp(&b.item_id)));
            ClusterItems { cluster, size, items }
        })
        .collect())
}
