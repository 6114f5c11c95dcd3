use super::{FactorMatrix, ModelState};
use crate::corpus::{LabeledExample, UserDataset};
use crate::linalg::{dist_sq, norm_sq};
use crate::solver::{check_dims, logistic_loss};
use crate::{Error, Result};

/// Per-user objective `loss(w) + c1‖w − Λλ‖² + c2‖λ‖²`.
pub fn user_objective(
    factors: &FactorMatrix,
    examples: &[LabeledExample],
    w: &[f64],
    lambda: &[f64],
    c1: f64,
    c2: f64,
) -> f64 {
    let mean = factors.mul_vec(lambda);
    logistic_loss(w, examples) + c1 * dist_sq(w, &mean) + c2 * norm_sq(lambda)
}

/// Training objective summed over all users plus `c3‖Λ‖²_F`, on training
/// examples only. Without factors (L2LR) the prior mean is zero.
pub fn full_objective(state: &ModelState, data: &[UserDataset]) -> Result<f64> {
    if state.profiles.len() != data.len() {
        return Err(Error::DimensionMismatch {
            what: "number of users".into(),
            expected: state.profiles.len(),
            actual: data.len(),
        });
    }
    let hyper = &state.hyper;
    let k = state.num_features();
    let mut total = match &state.factors {
        Some(f) => hyper.c3 * f.frobenius_sq(),
        None => 0.0,
    };
    for (p, user) in state.profiles.iter().zip(data) {
        if p.user_id != user.user_id {
            return Err(Error::InvalidArgument(format!(
                "profile for {} paired with data for {}",
                p.user_id, user.user_id
            )));
        }
        if p.w.len() != k {
            return Err(Error::DimensionMismatch {
                what: format!("profile of user {}", p.user_id),
                expected: k,
                actual: p.w.len(),
            });
        }
        check_dims(&user.train, k)?;
        total += match &state.factors {
            Some(f) => {
                if p.lambda.len() != f.num_factors() {
                    return Err(Error::DimensionMismatch {
                        what: format!("lambda of user {}", p.user_id),
                        expected: f.num_factors(),
                        actual: p.lambda.len(),
                    });
                }
                user_objective(f, &user.train, &p.w, &p.lambda, hyper.c1, hyper.c2)
            }
            None => logistic_loss(&p.w, &user.train) + hyper.c1 * norm_sq(&p.w),
        };
    }
    Ok(total)
}
