//! The anchored logistic objective
//! `Σ_j ln(1 + exp(−y_j wᵀx_j)) + c1‖w − anchor‖²` and its gradient.

use super::Objective;
use crate::corpus::LabeledExample;
use crate::linalg::dist_sq;
use crate::{Error, Result};

/// `ln(1 + e^z)` without overflow for large `z`.
pub fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `1 / (1 + e^{−t})`, evaluated on the side that cannot overflow.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Fails when any example references a feature index `>= dim`.
pub fn check_dims(examples: &[LabeledExample], dim: usize) -> Result<()> {
    for ex in examples {
        let d = ex.features.min_dim();
        if d > dim {
            return Err(Error::DimensionMismatch {
                what: format!("feature index of item {}", ex.item_id),
                expected: dim,
                actual: d,
            });
        }
    }
    Ok(())
}

pub fn logistic_loss(w: &[f64], examples: &[LabeledExample]) -> f64 {
    examples
        .iter()
        .map(|ex| log1p_exp(-ex.label.sign() * ex.features.dot(w)))
        .sum()
}

pub fn anchored_objective(w: &[f64], anchor: &[f64], c1: f64, examples: &[LabeledExample]) -> f64 {
    logistic_loss(w, examples) + c1 * dist_sq(w, anchor)
}

pub fn anchored_gradient(
    w: &[f64],
    anchor: &[f64],
    c1: f64,
    examples: &[LabeledExample],
) -> Vec<f64> {
    let mut grad = vec![0.0; w.len()];
    AnchoredLogistic::new(examples, anchor, c1).evaluate(w, &mut grad);
    grad
}

/// Per-user subproblem for a fixed prior mean `anchor`.
#[derive(Debug, Clone, Copy)]
pub struct AnchoredLogistic<'a> {
    pub examples: &'a [LabeledExample],
    pub anchor: &'a [f64],
    pub c1: f64,
}

impl<'a> AnchoredLogistic<'a> {
    pub fn new(examples: &'a [LabeledExample], anchor: &'a [f64], c1: f64) -> Self {
        AnchoredLogistic {
            examples,
            anchor,
            c1,
        }
    }
}

impl Objective for AnchoredLogistic<'_> {
    fn evaluate(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let mut value = 0.0;
        for ((g, wi), ai) in grad.iter_mut().zip(w).zip(self.anchor) {
            let diff = wi - ai;
            value += diff * diff;
            *g = 2.0 * self.c1 * diff;
        }
        value *= self.c1;
        for ex in self.examples {
            let y = ex.label.sign();
            let margin = y * ex.features.dot(w);
            value += log1p_exp(-margin);
            // −y x / (1 + exp(y wᵀx)) = −y x σ(−y wᵀx)
            ex.features.add_scaled_to(-y * sigmoid(-margin), grad);
        }
        value
    }
}
