//! Desk-scale oracles: exhaustive/multi-start subproblem solvers and
//! permutation-invariant cluster matching.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rand_distr::{Distribution, Normal};

use crate::corpus::UserDataset;
use crate::models::{user_objective, FactorMatrix, Hyperparams, UserFit, Variant};
use crate::rng::{substream, SYNTHETIC};
use crate::solver::{check_dims, minimize, AnchoredLogistic, Objective};
use crate::{Error, Result};

const MAX_K: usize = 20;
const MAX_H: usize = 5;
const MAX_J: usize = 20;

/// Random starts used by the Norm oracle.
pub const BRUTE_FORCE_RESTARTS: usize = 20;

fn check_size(factors: &FactorMatrix, user: &UserDataset) -> Result<()> {
    let (k, h, j) = (factors.num_features(), factors.num_factors(), user.train.len());
    if k > MAX_K || h > MAX_H || j > MAX_J {
        return Err(Error::InvalidArgument(format!(
            "oracle instance too large: K={k} (max {MAX_K}), H={h} (max {MAX_H}), J={j} (max {MAX_J})"
        )));
    }
    check_dims(&user.train, k)
}

/// The exact per-user minimizer by exhaustive search (Mult) or a multi-start
/// joint minimization over `(w, λ)` (Norm).
pub fn brute_force_subproblem(
    factors: &FactorMatrix,
    user: &UserDataset,
    hyper: &Hyperparams,
    variant: Variant,
) -> Result<UserFit> {
    match variant {
        Variant::DfpmMult | Variant::Bhlr => brute_force_mult(factors, user, hyper),
        Variant::DfpmNorm => brute_force_norm(factors, user, hyper, BRUTE_FORCE_RESTARTS),
        Variant::L2lr => Err(Error::Unsupported("L2LR has no factored subproblem".into())),
    }
}

fn brute_force_mult(factors: &FactorMatrix, user: &UserDataset, hyper: &Hyperparams) -> Result<UserFit> {
    check_size(factors, user)?;
    let mut best: Option<UserFit> = None;
    for c in 0..factors.num_factors() {
        let anchor = factors.column(c);
        let obj = AnchoredLogistic::new(&user.train, &anchor, hyper.c1);
        let w = minimize(&obj, &anchor, &hyper.solver)?.point;
        let mut lambda = vec![0.0; factors.num_factors()];
        lambda[c] = 1.0;
        let objective = user_objective(factors, &user.train, &w, &lambda, hyper.c1, hyper.c2);
        if best.as_ref().map_or(true, |b| objective < b.objective) {
            best = Some(UserFit {
                w,
                lambda,
                cluster: Some(c),
                objective,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("H must be >= 1".into()))
}

/// Joint objective over the stacked vector `[w; λ]`.
struct Joint<'a> {
    factors: &'a FactorMatrix,
    user: &'a UserDataset,
    c1: f64,
    c2: f64,
}

impl Objective for Joint<'_> {
    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let k = self.factors.num_features();
        let (w, lambda) = x.split_at(k);
        let mean = self.factors.mul_vec(lambda);
        let (gw, gl) = grad.split_at_mut(k);
        // Loss and ∂/∂w of the logistic part plus c1‖w − mean‖².
        let value = AnchoredLogistic::new(&self.user.train, &mean, self.c1).evaluate(w, gw);
        // ∂/∂λ = −2 c1 Λᵀ(w − Λλ) + 2 c2 λ
        let resid: Vec<f64> = w.iter().zip(&mean).map(|(a, b)| a - b).collect();
        let back = self.factors.transpose_mul(&resid);
        let mut reg = 0.0;
        for ((g, b), l) in gl.iter_mut().zip(back).zip(lambda) {
            *g = -2.0 * self.c1 * b + 2.0 * self.c2 * l;
            reg += l * l;
        }
        value + self.c2 * reg
    }
}

/// Multi-start joint minimization of the per-user objective. The first start
/// is the origin; the rest are Gaussian.
pub fn brute_force_norm(
    factors: &FactorMatrix,
    user: &UserDataset,
    hyper: &Hyperparams,
    restarts: usize,
) -> Result<UserFit> {
    check_size(factors, user)?;
    let (k, h) = (factors.num_features(), factors.num_factors());
    let joint = Joint {
        factors,
        user,
        c1: hyper.c1,
        c2: hyper.c2,
    };
    let settings = crate::solver::SolverSettings {
        gradient_tolerance: 1e-9,
        max_steps: 5000,
        ..hyper.solver
    };
    let mut rng = substream(hyper.seed, SYNTHETIC ^ 0xb7, 0);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut best: Option<UserFit> = None;
    for r in 0..restarts.max(1) {
        let x0: Vec<f64> = if r == 0 {
            vec![0.0; k + h]
        } else {
            (0..k + h).map(|_| normal.sample(&mut rng)).collect()
        };
        let m = minimize(&joint, &x0, &settings)?;
        if best.as_ref().map_or(true, |b| m.value < b.objective) {
            let (w, lambda) = m.point.split_at(k);
            best = Some(UserFit {
                w: w.to_vec(),
                lambda: lambda.to_vec(),
                cluster: None,
                objective: m.value,
            });
        }
    }
    Ok(best.expect("at least one start"))
}

fn best_assignment_bruteforce(conf: &[Vec<i64>]) -> i64 {
    fn go(row: usize, used: &mut [bool], conf: &[Vec<i64>]) -> i64 {
        if row == conf.len() {
            return 0;
        }
        let mut best = i64::MIN;
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                best = best.max(conf[row][c] + go(row + 1, used, conf));
                used[c] = false;
            }
        }
        best
    }
    go(0, &mut vec![false; conf.len()], conf)
}

/// Fraction of users whose predicted cluster agrees with the truth under the
/// best relabeling of predicted clusters. Exhaustive over permutations for up
/// to 8 labels, Hungarian assignment beyond that.
pub fn match_clusters(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "cluster assignments".into(),
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Ok(1.0);
    }
    let size = predicted.iter().chain(truth).max().map_or(0, |m| m + 1);
    let mut conf = vec![vec![0i64; size]; size];
    for (&p, &t) in predicted.iter().zip(truth) {
        conf[p][t] += 1;
    }
    let matched = if size <= 8 {
        best_assignment_bruteforce(&conf)
    } else {
        let weights = Matrix::from_rows(conf).expect("square matrix");
        kuhn_munkres(&weights).0
    };
    Ok(matched as f64 / predicted.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, LabeledExample, SparseVector};
    use crate::models::fit_user_mult;

    #[test]
    fn identical_and_relabeled_clusters() {
        let t = [0, 0, 1, 2, 1, 2];
        assert_eq!(match_clusters(&t, &t).unwrap(), 1.0);
        let swapped: Vec<usize> = t.iter().map(|&c| [1, 0, 2][c]).collect();
        assert_eq!(match_clusters(&swapped, &t).unwrap(), 1.0);
    }

    #[test]
    fn half_flipped() {
        // Truth [0,0,1,1]; predicting [0,1,1,0] matches 2 under either labeling.
        assert_eq!(match_clusters(&[0, 1, 1, 0], &[0, 0, 1, 1]).unwrap(), 0.5);
    }

    #[test]
    fn hungarian_agrees_with_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let n = 60;
            let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..8)).collect();
            let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..8)).collect();
            let size = 8;
            let mut conf = vec![vec![0i64; size]; size];
            for (&p, &t) in pred.iter().zip(&truth) {
                conf[p][t] += 1;
            }
            let exhaustive = best_assignment_bruteforce(&conf);
            let hungarian = kuhn_munkres(&Matrix::from_rows(conf).unwrap()).0;
            assert_eq!(exhaustive, hungarian);
        }
        // More than 8 labels goes through the Hungarian path.
        let t: Vec<usize> = (0..20).map(|i| i % 10).collect();
        let p: Vec<usize> = t.iter().map(|c| (c + 3) % 10).collect();
        assert_eq!(match_clusters(&p, &t).unwrap(), 1.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(match_clusters(&[0], &[0, 1]).is_err());
    }

    fn ex(values: &[f64], label: Label) -> LabeledExample {
        LabeledExample::new("i", SparseVector::from_dense(values), label)
    }

    #[test]
    fn exhaustive_matches_greedy_on_separated_columns() {
        let f = FactorMatrix::from_columns(&[vec![5.0, 0.0], vec![-5.0, 0.0]]).unwrap();
        let user = UserDataset::train_only(
            "u",
            vec![ex(&[1.0, 0.0], Label::Positive), ex(&[-1.0, 0.0], Label::Negative)],
        );
        let hyper = Hyperparams::default();
        let greedy = fit_user_mult(&f, &user, &hyper).unwrap();
        let exact = brute_force_subproblem(&f, &user, &hyper, Variant::DfpmMult).unwrap();
        assert_eq!(exact.cluster, greedy.cluster);
        for (a, b) in exact.w.iter().zip(&greedy.w) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn single_factor_oracle_is_greedy() {
        let f = FactorMatrix::from_columns(&[vec![0.5, -0.5]]).unwrap();
        let user = UserDataset::train_only("u", vec![ex(&[1.0, 1.0], Label::Positive)]);
        let hyper = Hyperparams::default();
        let greedy = fit_user_mult(&f, &user, &hyper).unwrap();
        let exact = brute_force_subproblem(&f, &user, &hyper, Variant::Bhlr).unwrap();
        assert_eq!(exact, greedy);
    }

    #[test]
    fn oversized_instances_rejected() {
        let f = FactorMatrix::zeros(21, 1);
        let user = UserDataset::train_only("u", vec![]);
        assert!(brute_force_subproblem(&f, &user, &Hyperparams::default(), Variant::DfpmMult).is_err());
        assert!(brute_force_subproblem(&FactorMatrix::zeros(2, 1), &user, &Hyperparams::default(), Variant::L2lr).is_err());
    }
}
