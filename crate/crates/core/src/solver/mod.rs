//! Smooth unconstrained minimization and the per-user logistic subproblem.

mod logistic;
mod ncg;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use logistic::{
    anchored_gradient, anchored_objective, check_dims, log1p_exp, logistic_loss, sigmoid,
    AnchoredLogistic,
};
pub use ncg::minimize;

/// A smooth function together with its gradient.
pub trait Objective {
    /// Writes `∇f(x)` into `grad` and returns `f(x)`.
    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn value(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; x.len()];
        self.evaluate(x, &mut g)
    }
}

impl<F> Objective for F
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self(x, grad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Stop once the gradient's L2 norm is at most this.
    pub gradient_tolerance: f64,
    pub max_steps: usize,
    /// Armijo constant of the strong Wolfe line search.
    pub sufficient_decrease: f64,
    /// Curvature constant of the strong Wolfe line search.
    pub curvature: f64,
    /// Function evaluations allowed per line search.
    pub max_line_search_evals: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            gradient_tolerance: 1e-6,
            max_steps: 200,
            sufficient_decrease: 1e-4,
            curvature: 0.1,
            max_line_search_evals: 40,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gradient_tolerance > 0.0
            && self.max_steps >= 1
            && self.sufficient_decrease > 0.0
            && self.sufficient_decrease < self.curvature
            && self.curvature < 1.0
            && self.max_line_search_evals >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid solver settings {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub steps: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}
