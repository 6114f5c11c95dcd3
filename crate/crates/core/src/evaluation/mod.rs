//! Precision / recall / macro-F1 per user, user-group breakdowns, paired
//! significance tests and factor inspection.

mod inspect;
mod stats;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledExample, UserDataset};
use crate::models::{predict, ModelState};
use crate::{Error, Result};

pub use inspect::{feature_names, top_factor_features, top_items_per_cluster, ClusterItems, FactorReport, ItemCount, TermWeight};
pub use stats::{paired_t_test, TTest};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Confusion counts of `predict` against the true labels; +1 is the positive class.
pub fn score_user(w: &[f64], examples: &[LabeledExample]) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for ex in examples {
        let (_, predicted) = predict(w, &ex.features);
        match (predicted.is_positive(), ex.label.is_positive()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user_id: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_train_positives: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1, each defined as 0 when its denominator is 0.
pub fn user_metrics(user_id: &str, counts: &ConfusionCounts, n_train_positives: usize) -> UserMetrics {
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    UserMetrics {
        user_id: user_id.to_string(),
        precision,
        recall,
        f1,
        n_train_positives,
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

/// Unweighted mean of per-user F1.
pub fn macro_f1(per_user: &[UserMetrics]) -> Result<f64> {
    if per_user.is_empty() {
        return Err(Error::InvalidArgument("macro-F1 of zero users".into()));
    }
    Ok(mean(per_user.iter().map(|m| m.f1)))
}

/// Which examples of each user are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn of<'a>(&self, user: &'a UserDataset) -> &'a [LabeledExample] {
        match self {
            Split::Train => &user.train,
            Split::Validation => &user.validation,
            Split::Test => &user.test,
        }
    }
}

/// Per-user metrics of `state` on `split`. Users whose split is empty are
/// left out; every remaining user must have a trained profile.
pub fn evaluate_users(state: &ModelState, data: &[UserDataset], split: Split) -> Result<Vec<UserMetrics>> {
    data.iter()
        .filter(|u| !split.of(u).is_empty())
        .map(|u| {
            let p = state.profile(&u.user_id).ok_or_else(|| {
                Error::InvalidArgument(format!("no trained profile for user {}", u.user_id))
            })?;
            crate::solver::check_dims(split.of(u), p.w.len()).map_err(|e| e.for_user(&u.user_id))?;
            let counts = score_user(&p.w, split.of(u));
            Ok(user_metrics(&u.user_id, &counts, u.n_train_positives()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overall {
    pub precision: f64,
    pub recall: f64,
    pub macro_f1: f64,
    pub users: usize,
}

pub fn overall(per_user: &[UserMetrics]) -> Result<Overall> {
    Ok(Overall {
        precision: mean(per_user.iter().map(|m| m.precision)),
        recall: mean(per_user.iter().map(|m| m.recall)),
        macro_f1: macro_f1(per_user)?,
        users: per_user.len(),
    })
}

/// Training-positive boundaries of the user groups: `[0,50)`, `[50,100)`,
/// `[100,200)`, `[200,500)`, `[500,∞)`.
pub const GROUP_BOUNDARIES: [usize; 4] = [50, 100, 200, 500];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub label: String,
    pub lower: usize,
    pub upper: Option<usize>,
    pub users: usize,
    pub precision: f64,
    pub recall: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub groups: Vec<GroupStats>,
}

pub fn group_label(n_train_positives: usize) -> &'static str {
    const LABELS: [&str; 5] = ["<50", "50-100", "100-200", "200-500", ">500"];
    LABELS[GROUP_BOUNDARIES.partition_point(|&b| b <= n_train_positives)]
}

/// Buckets users by number of training positives (half-open intervals).
pub fn group_users(per_user: &[UserMetrics]) -> GroupReport {
    let mut bounds = vec![0];
    bounds.extend(GROUP_BOUNDARIES);
    let groups = bounds
        .iter()
        .enumerate()
        .map(|(g, &lower)| {
            let upper = bounds.get(g + 1).copied();
            let members: Vec<&UserMetrics> = per_user
                .iter()
                .filter(|m| m.n_train_positives >= lower && upper.map_or(true, |u| m.n_train_positives < u))
                .collect();
            GroupStats {
                label: group_label(lower).to_string(),
                lower,
                upper,
                users: members.len(),
                precision: mean(members.iter().map(|m| m.precision)),
                recall: mean(members.iter().map(|m| m.recall)),
                macro_f1: mean(members.iter().map(|m| m.f1)),
            }
        })
        .collect();
    GroupReport { groups }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub baseline: String,
    #[serde(flatten)]
    pub test: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub overall: Overall,
    pub groups: Vec<GroupStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub significance: Option<Significance>,
    pub users: Vec<UserMetrics>,
}

impl MetricsReport {
    pub fn new(per_user: Vec<UserMetrics>) -> Result<Self> {
        Ok(MetricsReport {
            overall: overall(&per_user)?,
            groups: group_users(&per_user).groups,
            significance: None,
            users: per_user,
        })
    }
}
