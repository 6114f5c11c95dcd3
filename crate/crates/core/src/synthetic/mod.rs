//! Datasets sampled from the factored-prior generative model, with the ground
//! truth kept for verification, plus desk-scale oracles.

mod oracle;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{DatasetBundle, Label, LabeledExample, SparseVector, UserDataset};
use crate::models::FactorMatrix;
use crate::rng::{substream, SYNTHETIC};
use crate::solver::sigmoid;
use crate::{Error, Result};

pub use oracle::{brute_force_norm, brute_force_subproblem, match_clusters, BRUTE_FORCE_RESTARTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingPrior {
    /// One-hot `λ_m`, uniform over the factors.
    Mult,
    /// `λ_m ~ N(0, lambda_scale · I)`.
    Norm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Users.
    pub m: usize,
    /// Features.
    pub k: usize,
    /// True number of factors.
    pub h_true: usize,
    /// Training examples per user.
    pub j: usize,
    /// Validation and test examples per user (each).
    pub held_out: usize,
    /// Variance of the factor entries.
    pub factor_scale: f64,
    /// Variance of the `λ_m` entries (Norm only).
    pub lambda_scale: f64,
    /// Standard deviation of `w_m` around its prior mean.
    pub profile_noise: f64,
    /// Fraction of nonzero features per item vector.
    pub feature_density: f64,
    pub variant: MixingPrior,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            m: 60,
            k: 100,
            h_true: 3,
            j: 40,
            held_out: 40,
            factor_scale: 1.0,
            lambda_scale: 1.0,
            profile_noise: 0.1,
            feature_density: 0.1,
            variant: MixingPrior::Mult,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// Lists every offending field in one error.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [("m", self.m), ("k", self.k), ("h_true", self.h_true), ("j", self.j)] {
            if v < 1 {
                bad.push(format!("{name} must be >= 1"));
            }
        }
        if !(self.factor_scale > 0.0) {
            bad.push("factor_scale must be > 0".into());
        }
        if !(self.lambda_scale > 0.0) {
            bad.push("lambda_scale must be > 0".into());
        }
        if !(self.profile_noise >= 0.0) {
            bad.push("profile_noise must be >= 0".into());
        }
        if !(self.feature_density > 0.0 && self.feature_density <= 1.0) {
            bad.push("feature_density must be in (0, 1]".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }

    pub fn nonzeros_per_item(&self) -> usize {
        ((self.feature_density * self.k as f64).round() as usize).clamp(1, self.k)
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("dfpm-synthetic-v1\nk={}\n", self.k).as_bytes());
        hex::encode(&h.finalize()[..16])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub true_factors: FactorMatrix,
    pub true_lambdas: Vec<Vec<f64>>,
    pub true_profiles: Vec<Vec<f64>>,
    /// Cluster of each user (Mult only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_clusters: Option<Vec<usize>>,
}

fn random_item(cfg: &SyntheticConfig, rng: &mut impl Rng) -> SparseVector {
    let mut idx = index::sample(rng, cfg.k, cfg.nonzeros_per_item()).into_vec();
    idx.sort_unstable();
    let entries = idx
        .into_iter()
        .map(|i| (i, rng.sample::<f64, _>(StandardNormal)))
        .collect();
    SparseVector::from_sorted(entries)
        .expect("sorted distinct indices")
        .normalized()
}

fn labeled(cfg: &SyntheticConfig, w: &[f64], user: usize, n: usize, tag: &str, rng: &mut impl Rng) -> Vec<LabeledExample> {
    (0..n)
        .map(|j| {
            let x = random_item(cfg, rng);
            let p = sigmoid(x.dot(w));
            let y = if Bernoulli::new(p).expect("probability").sample(rng) {
                Label::Positive
            } else {
                Label::Negative
            };
            LabeledExample::new(format!("u{user}-{tag}{j}"), x, y)
        })
        .collect()
}

/// Samples `Λ → λ_m → w_m → (x, y)` for every user. User `m` draws from its
/// own substream, so results are independent of generation order.
pub fn generate(cfg: &SyntheticConfig) -> Result<(DatasetBundle, GroundTruth)> {
    cfg.validate()?;
    let (k, h) = (cfg.k, cfg.h_true);
    let mut rng = substream(cfg.seed, SYNTHETIC, 0);
    let factor_dist = Normal::new(0.0, cfg.factor_scale.sqrt()).expect("positive scale");
    let factors = FactorMatrix::from_row_major(k, h, (0..k * h).map(|_| factor_dist.sample(&mut rng)).collect())?;
    let lambda_dist = Normal::new(0.0, cfg.lambda_scale.sqrt()).expect("positive scale");
    let noise = Normal::new(0.0, cfg.profile_noise).expect("non-negative noise");

    let mut users = Vec::with_capacity(cfg.m);
    let mut lambdas = Vec::with_capacity(cfg.m);
    let mut profiles = Vec::with_capacity(cfg.m);
    let mut clusters = Vec::with_capacity(cfg.m);
    for m in 0..cfg.m {
        let mut rng = substream(cfg.seed, SYNTHETIC, m as u64 + 1);
        let lambda: Vec<f64> = match cfg.variant {
            MixingPrior::Mult => {
                let c = rng.gen_range(0..h);
                clusters.push(c);
                (0..h).map(|i| if i == c { 1.0 } else { 0.0 }).collect()
            }
            MixingPrior::Norm => (0..h).map(|_| lambda_dist.sample(&mut rng)).collect(),
        };
        let mean = factors.mul_vec(&lambda);
        let w: Vec<f64> = if cfg.profile_noise == 0.0 {
            mean
        } else {
            mean.iter().map(|mu| mu + noise.sample(&mut rng)).collect()
        };
        users.push(UserDataset {
            user_id: format!("u{m}"),
            train: labeled(cfg, &w, m, cfg.j, "t", &mut rng),
            validation: labeled(cfg, &w, m, cfg.held_out, "v", &mut rng),
            test: labeled(cfg, &w, m, cfg.held_out, "x", &mut rng),
        });
        lambdas.push(lambda);
        profiles.push(w);
    }
    let truth = GroundTruth {
        true_factors: factors,
        true_lambdas: lambdas,
        true_profiles: profiles,
        true_clusters: (cfg.variant == MixingPrior::Mult).then_some(clusters),
    };
    Ok((DatasetBundle::new(k, cfg.fingerprint(), users), truth))
}
