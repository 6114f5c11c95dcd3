//! Polak–Ribière nonlinear conjugate gradient with a strong Wolfe line search.

use super::{Minimum, Objective, SolverSettings};
use crate::linalg::{axpy, dot, norm};
use crate::{Error, Result};

struct Trial {
    alpha: f64,
    value: f64,
    slope: f64,
}

struct LineSearch<'a, F: Objective> {
    f: &'a F,
    x: &'a [f64],
    dir: &'a [f64],
    f0: f64,
    slope0: f64,
    settings: &'a SolverSettings,
    step: usize,
    evals: usize,
    point: Vec<f64>,
    grad: Vec<f64>,
}

/// Result of a successful line search; `point` / `grad` hold the accepted iterate.
struct Accepted {
    value: f64,
    alpha: f64,
}

impl<'a, F: Objective> LineSearch<'a, F> {
    fn eval(&mut self, alpha: f64) -> Result<Trial> {
        self.evals += 1;
        self.point.copy_from_slice(self.x);
        axpy(alpha, self.dir, &mut self.point);
        let value = self.f.evaluate(&self.point, &mut self.grad);
        if !value.is_finite() || self.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                step: self.step,
                value,
                point: self.point.clone(),
            });
        }
        Ok(Trial {
            alpha,
            value,
            slope: dot(&self.grad, self.dir),
        })
    }

    fn armijo_ok(&self, t: &Trial) -> bool {
        t.value <= self.f0 + self.settings.sufficient_decrease * t.alpha * self.slope0
    }

    fn curvature_ok(&self, t: &Trial) -> bool {
        t.slope.abs() <= -self.settings.curvature * self.slope0
    }

    /// Returns `None` when no acceptable step was found within the budget.
    fn run(&mut self, alpha_init: f64) -> Result<Option<Accepted>> {
        let mut prev = Trial {
            alpha: 0.0,
            value: self.f0,
            slope: self.slope0,
        };
        let mut alpha = alpha_init;
        let mut first = true;
        while self.evals < self.settings.max_line_search_evals {
            let t = self.eval(alpha)?;
            if !self.armijo_ok(&t) || (!first && t.value >= prev.value) {
                return self.zoom(prev, t);
            }
            if self.curvature_ok(&t) {
                return Ok(Some(Accepted {
                    value: t.value,
                    alpha: t.alpha,
                }));
            }
            if t.slope >= 0.0 {
                return self.zoom(t, prev);
            }
            first = false;
            alpha = t.alpha * 2.0;
            prev = t;
        }
        self.settle(prev)
    }

    fn zoom(&mut self, mut lo: Trial, mut hi: Trial) -> Result<Option<Accepted>> {
        while self.evals < self.settings.max_line_search_evals {
            let alpha = interpolate(&lo, &hi);
            if (hi.alpha - lo.alpha).abs() <= f64::EPSILON * lo.alpha.abs().max(1e-300) {
                break;
            }
            let t = self.eval(alpha)?;
            if !self.armijo_ok(&t) || t.value >= lo.value {
                hi = t;
            } else {
                if self.curvature_ok(&t) {
                    return Ok(Some(Accepted {
                        value: t.value,
                        alpha: t.alpha,
                    }));
                }
                if t.slope * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = t;
            }
        }
        self.settle(lo)
    }

    /// Falls back to the best sufficient-decrease point seen, if any.
    fn settle(&mut self, best: Trial) -> Result<Option<Accepted>> {
        if best.alpha > 0.0 && best.value < self.f0 {
            let t = self.eval(best.alpha)?;
            Ok(Some(Accepted {
                value: t.value,
                alpha: t.alpha,
            }))
        } else {
            Ok(None)
        }
    }
}

/// Safeguarded cubic interpolation of the minimizer inside `[lo, hi]`.
fn interpolate(lo: &Trial, hi: &Trial) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let width = b - a;
    let d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    let bisect = 0.5 * (a + b);
    if !(disc >= 0.0) || !width.is_finite() {
        return bisect;
    }
    let d2 = width.signum() * disc.sqrt();
    let denom = hi.slope - lo.slope + 2.0 * d2;
    if denom == 0.0 {
        return bisect;
    }
    let c = b - width * (hi.slope + d2 - d1) / denom;
    let (min, max) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (max - min);
    if c.is_finite() && c >= min + margin && c <= max - margin {
        c
    } else {
        bisect
    }
}

/// Minimizes `f` from `x0` with Polak–Ribière+ conjugate gradient.
///
/// The direction restarts to steepest descent whenever the PR coefficient goes
/// negative, the direction stops being a descent direction, or every `n`
/// steps. The returned value never exceeds `f(x0)`.
pub fn minimize<F: Objective>(f: &F, x0: &[f64], settings: &SolverSettings) -> Result<Minimum> {
    settings.validate()?;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; n];
    let mut value = f.evaluate(&x, &mut grad);
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            step: 0,
            value,
            point: x,
        });
    }
    let initial_value = value;
    let mut gnorm = norm(&grad);
    let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut prev_alpha = 0.0;
    let mut prev_slope = 0.0;
    let mut since_restart = 0usize;
    let mut steps = 0usize;

    while gnorm > settings.gradient_tolerance && steps < settings.max_steps {
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            slope = -gnorm * gnorm;
            since_restart = 0;
        }
        let alpha_init = if prev_alpha > 0.0 {
            (prev_alpha * prev_slope / slope).clamp(1e-10, 1e10)
        } else {
            (1.0 / gnorm).min(1.0)
        };

        let mut ls = LineSearch {
            f,
            x: &x,
            dir: &dir,
            f0: value,
            slope0: slope,
            settings,
            step: steps,
            evals: 0,
            point: vec![0.0; n],
            grad: vec![0.0; n],
        };
        let accepted = ls.run(alpha_init)?;
        let Some(acc) = accepted else {
            if since_restart == 0 {
                // Steepest descent made no progress: at the resolution limit.
                break;
            }
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            since_restart = 0;
            prev_alpha = 0.0;
            continue;
        };
        let LineSearch {
            point: new_x,
            grad: new_grad,
            ..
        } = ls;
        steps += 1;

        // Polak–Ribière+: β = max(0, gₖ₊₁ᵀ(gₖ₊₁ − gₖ) / gₖᵀgₖ)
        let gg_old = gnorm * gnorm;
        let gg_cross = dot(&new_grad, &grad);
        let gg_new = dot(&new_grad, &new_grad);
        let mut beta = ((gg_new - gg_cross) / gg_old).max(0.0);
        since_restart += 1;
        if since_restart >= n.max(1) {
            beta = 0.0;
            since_restart = 0;
        }
        for (d, g) in dir.iter_mut().zip(&new_grad) {
            *d = -g + beta * *d;
        }

        prev_alpha = acc.alpha;
        prev_slope = slope;
        value = acc.value;
        x = new_x;
        grad = new_grad;
        gnorm = gg_new.sqrt();
    }

    assert!(
        value <= initial_value,
        "line search accepted an increasing step"
    );
    Ok(Minimum {
        point: x,
        value,
        steps,
        gradient_norm: gnorm,
        converged: gnorm <= settings.gradient_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, LabeledExample, SparseVector};
    use crate::solver::{anchored_objective, AnchoredLogistic};

    fn quadratic(a: Vec<f64>) -> impl Fn(&[f64], &mut [f64]) -> f64 {
        move |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..x.len() {
                let d = x[i] - a[i];
                g[i] = 2.0 * d;
                v += d * d;
            }
            v
        }
    }

    #[test]
    fn quadratic_minimizer_found() {
        let a = vec![1.5, -2.0, 0.25, 7.0];
        let m = minimize(&quadratic(a.clone()), &[0.0; 4], &SolverSettings::default()).unwrap();
        assert!(m.converged);
        for (xi, ai) in m.point.iter().zip(&a) {
            assert!((xi - ai).abs() < 1e-8);
        }
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0];
            g[1] = 2000.0 * (x[1] - 1.0);
            x[0] * x[0] + 1000.0 * (x[1] - 1.0).powi(2)
        };
        let m = minimize(&f, &[3.0, -4.0], &SolverSettings::default()).unwrap();
        assert!(m.converged, "{m:?}");
        assert!(m.point[0].abs() < 1e-6 && (m.point[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let settings = SolverSettings {
            max_steps: 5000,
            ..Default::default()
        };
        let m = minimize(&f, &[-1.2, 1.0], &settings).unwrap();
        assert!(m.converged, "{m:?}");
        assert!((m.point[0] - 1.0).abs() < 1e-5 && (m.point[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn no_examples_returns_anchor() {
        let anchor = vec![0.3, -1.0, 2.0];
        let obj = AnchoredLogistic::new(&[], &anchor, 0.5);
        let m = minimize(&obj, &[0.0; 3], &SolverSettings::default()).unwrap();
        for (a, b) in m.point.iter().zip(&anchor) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn already_optimal_start_takes_no_steps() {
        let m = minimize(&quadratic(vec![1.0]), &[1.0], &SolverSettings::default()).unwrap();
        assert_eq!(m.steps, 0);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            if x[0] > 0.5 {
                f64::NAN
            } else {
                -x[0]
            }
        };
        let f0 = |x: &[f64], g: &mut [f64]| {
            g[0] = 0.0;
            f64::INFINITY + x[0]
        };
        assert!(matches!(
            minimize(&f0, &[0.0], &SolverSettings::default()),
            Err(Error::NonFinite { step: 0, .. })
        ));
        // Linear decrease toward a NaN region: the line search hits it.
        let g = |x: &[f64], gr: &mut [f64]| {
            gr[0] = -1.0;
            if x[0] > 0.5 {
                f64::NAN
            } else {
                -x[0]
            }
        };
        match minimize(&g, &[0.0], &SolverSettings::default()) {
            Err(Error::NonFinite { point, .. }) => assert!(point[0] > 0.5),
            other => panic!("expected non-finite error, got {other:?}"),
        }
        let _ = f;
    }

    #[test]
    fn invalid_settings_rejected() {
        let s = SolverSettings {
            gradient_tolerance: 0.0,
            ..Default::default()
        };
        assert!(minimize(&quadratic(vec![0.0]), &[1.0], &s).is_err());
        let s = SolverSettings {
            max_steps: 0,
            ..Default::default()
        };
        assert!(minimize(&quadratic(vec![0.0]), &[1.0], &s).is_err());
    }

    /// Independent oracle for a 2-parameter logistic problem: Newton's method
    /// with the analytic Hessian, started from a coarse grid search.
    fn newton_oracle(data: &[LabeledExample], c1: f64) -> [f64; 2] {
        let f = |w: [f64; 2]| {
            let mut v = c1 * (w[0] * w[0] + w[1] * w[1]);
            for e in data {
                let z = -e.label.sign() * e.features.dot(&w);
                v += (1.0 + z.exp()).ln();
            }
            v
        };
        let mut best = [0.0, 0.0];
        let mut best_v = f(best);
        for i in -40..=40 {
            for j in -40..=40 {
                let w = [i as f64 * 0.25, j as f64 * 0.25];
                let v = f(w);
                if v < best_v {
                    best_v = v;
                    best = w;
                }
            }
        }
        let mut w = best;
        for _ in 0..50 {
            let mut g = [2.0 * c1 * w[0], 2.0 * c1 * w[1]];
            let mut h = [[2.0 * c1, 0.0], [0.0, 2.0 * c1]];
            for e in data {
                let x = e.features.to_dense(2);
                let y = e.label.sign();
                let p = 1.0 / (1.0 + (y * (x[0] * w[0] + x[1] * w[1])).exp());
                let s = p * (1.0 - p);
                for a in 0..2 {
                    g[a] -= y * x[a] * p;
                    for b in 0..2 {
                        h[a][b] += s * x[a] * x[b];
                    }
                }
            }
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            let dx = [
                (h[1][1] * g[0] - h[0][1] * g[1]) / det,
                (h[0][0] * g[1] - h[1][0] * g[0]) / det,
            ];
            w = [w[0] - dx[0], w[1] - dx[1]];
        }
        w
    }

    #[test]
    fn separable_logistic_matches_newton_oracle() {
        let data = vec![
            LabeledExample::new("a", SparseVector::from_dense(&[1.0, 0.5]), Label::Positive),
            LabeledExample::new("b", SparseVector::from_dense(&[-0.5, -1.0]), Label::Negative),
        ];
        let c1 = 0.1;
        let anchor = [0.0, 0.0];
        let obj = AnchoredLogistic::new(&data, &anchor, c1);
        let m = minimize(&obj, &[0.0, 0.0], &SolverSettings::default()).unwrap();
        let want = newton_oracle(&data, c1);
        for (a, b) in m.point.iter().zip(&want) {
            assert!((a - b).abs() < 1e-4, "{:?} vs {want:?}", m.point);
        }
        assert!((m.value - anchored_objective(&want, &anchor, c1, &data)).abs() < 1e-9);
    }
}
