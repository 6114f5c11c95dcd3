//! Step A: per-user profile fits for a fixed factor matrix.

use super::factors::LambdaSolver;
use super::objective::user_objective;
use super::{FactorMatrix, Hyperparams};
use crate::corpus::{LabeledExample, UserDataset};
use crate::solver::{check_dims, log1p_exp, minimize, AnchoredLogistic};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct UserFit {
    pub w: Vec<f64>,
    pub lambda: Vec<f64>,
    pub cluster: Option<usize>,
    /// Value of the per-user objective at `(w, lambda)`.
    pub objective: f64,
}

fn rel_change(prev: f64, cur: f64) -> f64 {
    let scale = prev.abs().max(cur.abs());
    if scale == 0.0 {
        0.0
    } else {
        (prev - cur).abs() / scale
    }
}

fn check_user(factors: &FactorMatrix, user: &UserDataset) -> Result<()> {
    check_dims(&user.train, factors.num_features()).map_err(|e| e.for_user(&user.user_id))
}

/// DFPM-Norm Step A from `λ⁰ = 0`.
pub fn fit_user_norm(
    factors: &FactorMatrix,
    user: &UserDataset,
    hyper: &Hyperparams,
) -> Result<UserFit> {
    let solver = LambdaSolver::new(factors, hyper.c1, hyper.c2)?;
    fit_user_norm_from(factors, &solver, user, hyper, None)
}

/// DFPM-Norm Step A: alternate the profile solve (anchor `Λλ`) with the
/// closed-form `λ` update until the per-user objective settles.
///
/// `warm` supplies the starting `(w, λ)`; without it the loop starts from
/// `w = 0, λ = 0`.
pub fn fit_user_norm_from(
    factors: &FactorMatrix,
    lambda_solver: &LambdaSolver,
    user: &UserDataset,
    hyper: &Hyperparams,
    warm: Option<(&[f64], &[f64])>,
) -> Result<UserFit> {
    check_user(factors, user)?;
    let k = factors.num_features();
    let h = factors.num_factors();
    let (mut w, mut lambda) = match warm {
        Some((w, l)) => (w.to_vec(), l.to_vec()),
        None => (vec![0.0; k], vec![0.0; h]),
    };
    let examples = &user.train;
    let mut value = user_objective(factors, examples, &w, &lambda, hyper.c1, hyper.c2);
    for _ in 0..hyper.max_inner_iters {
        let anchor = factors.mul_vec(&lambda);
        let obj = AnchoredLogistic::new(examples, &anchor, hyper.c1);
        w = minimize(&obj, &w, &hyper.solver)
            .map_err(|e| e.for_user(&user.user_id))?
            .point;
        lambda = lambda_solver.solve(factors, &w);
        let next = user_objective(factors, examples, &w, &lambda, hyper.c1, hyper.c2);
        let done = rel_change(value, next) < hyper.outer_rel_tolerance;
        value = next;
        if done {
            break;
        }
    }
    Ok(UserFit {
        w,
        lambda,
        cluster: None,
        objective: value,
    })
}

/// `Σ_j ln(1 + exp(−y_j Λ_cᵀ x_j))` for every column `c`.
pub fn column_losses(factors: &FactorMatrix, examples: &[LabeledExample]) -> Vec<f64> {
    let mut losses = vec![0.0; factors.num_factors()];
    for ex in examples {
        let y = ex.label.sign();
        for (l, s) in losses.iter_mut().zip(factors.column_scores(&ex.features)) {
            *l += log1p_exp(-y * s);
        }
    }
    losses
}

/// Index of the smallest value; the lowest index wins ties.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Profile solve with the prior mean pinned to column `c`, started at the
/// column itself.
pub(crate) fn fit_to_column(
    factors: &FactorMatrix,
    user: &UserDataset,
    hyper: &Hyperparams,
    c: usize,
) -> Result<UserFit> {
    let anchor = factors.column(c);
    let obj = AnchoredLogistic::new(&user.train, &anchor, hyper.c1);
    let w = minimize(&obj, &anchor, &hyper.solver)
        .map_err(|e| e.for_user(&user.user_id))?
        .point;
    let mut lambda = vec![0.0; factors.num_factors()];
    lambda[c] = 1.0;
    let objective = user_objective(factors, &user.train, &w, &lambda, hyper.c1, hyper.c2);
    Ok(UserFit {
        w,
        lambda,
        cluster: Some(c),
        objective,
    })
}

/// DFPM-Mult Step A (greedy): pick the column whose logistic loss is lowest
/// when used directly as the profile, make `λ` one-hot there, then solve for
/// `w` anchored at that column.
pub fn fit_user_mult(
    factors: &FactorMatrix,
    user: &UserDataset,
    hyper: &Hyperparams,
) -> Result<UserFit> {
    if factors.num_factors() == 0 {
        return Err(Error::InvalidArgument("H must be >= 1".into()));
    }
    check_user(factors, user)?;
    let c = argmin(&column_losses(factors, &user.train));
    fit_to_column(factors, user, hyper, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, SparseVector};
    use crate::linalg::dist_sq;

    fn ex(values: &[f64], label: Label) -> LabeledExample {
        LabeledExample::new("i", SparseVector::from_dense(values), label)
    }

    #[test]
    fn greedy_picks_lowest_loss_column() {
        let f = FactorMatrix::from_columns(&[vec![5.0, 0.0], vec![-5.0, 0.0]]).unwrap();
        let user = UserDataset::train_only(
            "u",
            vec![ex(&[1.0, 0.0], Label::Positive), ex(&[-1.0, 0.0], Label::Negative)],
        );
        let losses = column_losses(&f, &user.train);
        assert!((losses[0] - 0.013_430_696_978_236_137).abs() < 1e-15);
        assert!((losses[1] - 10.013_430_696_978_236).abs() < 1e-12);
        let fit = fit_user_mult(&f, &user, &Hyperparams::default()).unwrap();
        assert_eq!(fit.cluster, Some(0));
        assert_eq!(fit.lambda, vec![1.0, 0.0]);
    }

    #[test]
    fn single_column_and_ties() {
        let f = FactorMatrix::from_columns(&[vec![1.0, 2.0]]).unwrap();
        let user = UserDataset::train_only("u", vec![ex(&[1.0, 0.0], Label::Negative)]);
        assert_eq!(fit_user_mult(&f, &user, &Hyperparams::default()).unwrap().cluster, Some(0));

        let f = FactorMatrix::from_columns(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(fit_user_mult(&f, &user, &Hyperparams::default()).unwrap().cluster, Some(0));
    }

    #[test]
    fn mult_without_examples_returns_column() {
        let f = FactorMatrix::from_columns(&[vec![0.3, -0.2], vec![1.0, 1.0]]).unwrap();
        let fit = fit_user_mult(&f, &UserDataset::train_only("u", vec![]), &Hyperparams::default())
            .unwrap();
        assert_eq!(fit.cluster, Some(0));
        assert_eq!(fit.w, vec![0.3, -0.2]);
    }

    #[test]
    fn norm_without_examples_is_zero() {
        let f = FactorMatrix::from_columns(&[vec![0.3, -0.2, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let fit = fit_user_norm(&f, &UserDataset::train_only("u", vec![]), &Hyperparams::default())
            .unwrap();
        assert_eq!(fit.w, vec![0.0; 3]);
        assert_eq!(fit.lambda, vec![0.0; 2]);
        assert_eq!(fit.objective, 0.0);
    }

    #[test]
    fn huge_c1_pins_profile_to_prior_mean() {
        let f = FactorMatrix::from_columns(&[vec![1.0, 0.5, 0.0], vec![0.0, -1.0, 2.0]]).unwrap();
        let user = UserDataset::train_only(
            "u",
            vec![ex(&[1.0, 0.0, 0.0], Label::Positive), ex(&[0.0, 0.0, 1.0], Label::Negative)],
        );
        let hyper = Hyperparams {
            h: 2,
            c1: 1e6,
            c2: 1.0,
            ..Default::default()
        };
        let fit = fit_user_norm(&f, &user, &hyper).unwrap();
        let mean = f.mul_vec(&fit.lambda);
        assert!(dist_sq(&fit.w, &mean).sqrt() < 1e-3);
    }

    #[test]
    fn solver_errors_carry_user_id() {
        let f = FactorMatrix::from_columns(&[vec![1.0]]).unwrap();
        let user = UserDataset::train_only("alice", vec![ex(&[0.0, 1.0], Label::Positive)]);
        let err = fit_user_mult(&f, &user, &Hyperparams::default()).unwrap_err();
        assert!(err.to_string().contains("alice"), "{err}");
    }

    #[test]
    fn argmin_prefers_lowest_index() {
        assert_eq!(argmin(&[2.0, 1.0, 1.0]), 1);
        assert_eq!(argmin(&[0.0, 0.0]), 0);
    }
}
