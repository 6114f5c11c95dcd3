//! The four trainable models: independent L2 logistic regression (L2LR),
//! hierarchical logistic regression with one shared prior mean (BHLR), and the
//! factored-prior models DFPM-Norm and DFPM-Mult.
//!
//! All four minimize, over every user `m`,
//!
//! ```text
//! Σ_j ln(1 + exp(−y_mj w_mᵀ x_mj)) + c1‖w_m − Λλ_m‖² + c2‖λ_m‖²   (+ c3‖Λ‖²_F once)
//! ```
//!
//! and differ in how `Λ` and `λ_m` are constrained.

mod factors;
mod objective;
mod persist;
mod train;
mod user;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, SparseVector};
use crate::solver::{sigmoid, SolverSettings};
use crate::{Error, Result};

pub use factors::{solve_lambda_norm, update_factor_matrix, FactorMatrix, LambdaSolver};
pub use objective::{full_objective, user_objective};
pub use persist::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use train::{initial_factors, train, train_with_workers};
pub use user::{column_losses, fit_user_mult, fit_user_norm, fit_user_norm_from, UserFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "L2LR")]
    L2lr,
    #[serde(rename = "BHLR")]
    Bhlr,
    #[serde(rename = "DFPM_NORM")]
    DfpmNorm,
    #[serde(rename = "DFPM_MULT")]
    DfpmMult,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::L2lr,
        Variant::Bhlr,
        Variant::DfpmNorm,
        Variant::DfpmMult,
    ];

    pub fn has_factors(self) -> bool {
        self != Variant::L2lr
    }

    /// Command-line spelling.
    pub fn as_flag(self) -> &'static str {
        match self {
            Variant::L2lr => "l2lr",
            Variant::Bhlr => "bhlr",
            Variant::DfpmNorm => "dfpm-norm",
            Variant::DfpmMult => "dfpm-mult",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_flag())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Variant::ALL
            .into_iter()
            .find(|v| v.as_flag() == norm)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown variant {s:?} (expected l2lr, bhlr, dfpm-mult or dfpm-norm)"
                ))
            })
    }
}

/// How the factor matrix is seeded before the first outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorInit {
    /// Entries `N(0, init_scale²)`.
    #[default]
    Gaussian,
    /// Columns copied from the L2LR profiles of `H` randomly chosen users.
    L2lrProfiles,
    /// L2LR profiles of `H` users picked by k-means++ seeding: each next pick
    /// is drawn with probability proportional to its squared distance from
    /// the nearest profile already picked.
    L2lrSpread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Number of hidden factors.
    pub h: usize,
    /// Weight of `‖w − Λλ‖²` (stands in for the prior covariance).
    pub c1: f64,
    /// Weight of `‖λ‖²`.
    pub c2: f64,
    /// Weight of `‖Λ‖²_F`.
    pub c3: f64,
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    pub outer_rel_tolerance: f64,
    pub solver: SolverSettings,
    pub seed: u64,
    pub init: FactorInit,
    pub init_scale: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            h: 5,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            max_outer_iters: 20,
            max_inner_iters: 10,
            outer_rel_tolerance: 1e-4,
            solver: SolverSettings::default(),
            seed: 0,
            init: FactorInit::Gaussian,
            init_scale: 0.01,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self, variant: Variant) -> Result<()> {
        let mut bad = Vec::new();
        if self.h < 1 {
            bad.push("h must be >= 1");
        }
        if variant == Variant::L2lr {
            if !(self.c1 >= 0.0) {
                bad.push("c1 must be >= 0");
            }
        } else if !(self.c1 > 0.0) {
            bad.push("c1 must be > 0");
        }
        if !(self.c2 >= 0.0) {
            bad.push("c2 must be >= 0");
        }
        if variant.has_factors() && !(self.c3 > 0.0) {
            bad.push("c3 must be > 0");
        }
        if self.max_outer_iters < 1 {
            bad.push("max_outer_iters must be >= 1");
        }
        if self.max_inner_iters < 1 {
            bad.push("max_inner_iters must be >= 1");
        }
        if !(self.outer_rel_tolerance > 0.0) {
            bad.push("outer_rel_tolerance must be > 0");
        }
        if !(self.init_scale >= 0.0) {
            bad.push("init_scale must be >= 0");
        }
        if let Err(e) = self.solver.validate() {
            return Err(e);
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub w: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Position of the single 1 in `lambda` (DFPM-Mult and BHLR only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub variant: Variant,
    pub hyper: Hyperparams,
    pub factors: Option<FactorMatrix>,
    pub profiles: Vec<UserProfile>,
    pub objective_trace: Vec<f64>,
    pub vocab_fingerprint: String,
}

impl ModelState {
    pub fn profile(&self, user_id: &str) -> Option<&UserProfile> {
        self.profiles.iter().find(|p| p.user_id == user_id)
    }

    pub fn num_features(&self) -> usize {
        self.factors
            .as_ref()
            .map(FactorMatrix::num_features)
            .or_else(|| self.profiles.first().map(|p| p.w.len()))
            .unwrap_or(0)
    }

    /// Users per cluster, for models with one-hot mixing vectors.
    pub fn cluster_sizes(&self) -> Option<Vec<usize>> {
        let h = self.factors.as_ref()?.num_factors();
        let mut sizes = vec![0; h];
        for p in &self.profiles {
            sizes[p.cluster?] += 1;
        }
        Some(sizes)
    }

    /// Refuses data built from a different vocabulary than the model.
    pub fn check_fingerprint(&self, data_fingerprint: &str) -> Result<()> {
        if self.vocab_fingerprint == data_fingerprint {
            Ok(())
        } else {
            Err(Error::FingerprintMismatch {
                model: self.vocab_fingerprint.clone(),
                data: data_fingerprint.to_string(),
            })
        }
    }
}

/// Relevance probability `σ(wᵀx)` and the thresholded label; ties at exactly
/// 0.5 go to the positive class.
pub fn predict(w: &[f64], x: &SparseVector) -> (f64, Label) {
    let score = x.dot(w);
    let label = if score >= 0.0 {
        Label::Positive
    } else {
        Label::Negative
    };
    (sigmoid(score), label)
}
