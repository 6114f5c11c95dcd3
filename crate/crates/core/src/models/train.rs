//! Outer alternating loop: Step A (per-user fits, parallel) and Step B
//! (closed-form factor update, a fixed-order reduction).

use log::{debug, info};
use rand::seq::index;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::factors::LambdaSolver;
use super::objective::full_objective;
use super::user::{fit_user_mult, fit_user_norm_from, UserFit};
use super::{update_factor_matrix, FactorInit, FactorMatrix, Hyperparams, ModelState, UserProfile, Variant};
use crate::corpus::{DatasetBundle, UserDataset};
use crate::rng::{substream, FACTOR_INIT};
use crate::linalg::dist_sq;
use crate::solver::{minimize, AnchoredLogistic};
use crate::{Error, Result};

struct Workers(Option<rayon::ThreadPool>);

impl Workers {
    fn new(n: usize) -> Result<Self> {
        if n <= 1 {
            return Ok(Workers(None));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|p| Workers(Some(p)))
            .map_err(|e| Error::InvalidArgument(format!("cannot start {n} workers: {e}")))
    }

    /// Applies `f` to every user; output order always follows input order.
    fn map<T, F>(&self, users: &[UserDataset], f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &UserDataset) -> Result<T> + Sync,
    {
        match &self.0 {
            None => users.iter().enumerate().map(|(i, u)| f(i, u)).collect(),
            Some(pool) => pool.install(|| {
                users
                    .par_iter()
                    .enumerate()
                    .map(|(i, u)| f(i, u))
                    .collect()
            }),
        }
    }
}

fn rel_change(prev: f64, cur: f64) -> f64 {
    let scale = prev.abs().max(cur.abs());
    if scale == 0.0 {
        0.0
    } else {
        (prev - cur).abs() / scale
    }
}

fn l2lr_profiles(
    users: &[UserDataset],
    k: usize,
    hyper: &Hyperparams,
    workers: &Workers,
) -> Result<Vec<(Vec<f64>, f64)>> {
    let zero = vec![0.0; k];
    workers.map(users, |_, u| {
        let obj = AnchoredLogistic::new(&u.train, &zero, hyper.c1);
        let m = minimize(&obj, &zero, &hyper.solver).map_err(|e| e.for_user(&u.user_id))?;
        Ok((m.point, m.value))
    })
}

/// Seeded starting factor matrix `Λ⁰` (`K×H`).
pub fn initial_factors(users: &[UserDataset], k: usize, hyper: &Hyperparams) -> Result<FactorMatrix> {
    initial_factors_with(users, k, hyper, &Workers(None))
}

fn initial_factors_with(
    users: &[UserDataset],
    k: usize,
    hyper: &Hyperparams,
    workers: &Workers,
) -> Result<FactorMatrix> {
    let h = hyper.h;
    let mut rng = substream(hyper.seed, FACTOR_INIT, 0);
    let normal = Normal::new(0.0, hyper.init_scale)
        .map_err(|e| Error::InvalidArgument(format!("init_scale: {e}")))?;
    let mut data: Vec<f64> = (0..k * h).map(|_| normal.sample(&mut rng)).collect();
    let columns: Vec<Vec<f64>> = match hyper.init {
        _ if users.is_empty() => Vec::new(),
        FactorInit::Gaussian => Vec::new(),
        FactorInit::L2lrProfiles => {
            let picked = index::sample(&mut rng, users.len(), h.min(users.len())).into_vec();
            let chosen: Vec<UserDataset> = picked.iter().map(|&i| users[i].clone()).collect();
            l2lr_profiles(&chosen, k, hyper, workers)?.into_iter().map(|(w, _)| w).collect()
        }
        FactorInit::L2lrSpread => {
            let profiles: Vec<Vec<f64>> = l2lr_profiles(users, k, hyper, workers)?.into_iter().map(|(w, _)| w).collect();
            spread_picks(&profiles, h, &mut rng).into_iter().map(|i| profiles[i].clone()).collect()
        }
    };
    for (c, w) in columns.iter().enumerate() {
        for (r, v) in w.iter().enumerate() {
            data[r * h + c] = *v;
        }
    }
    FactorMatrix::from_row_major(k, h, data)
}

/// k-means++ seeding: up to `h` distinct indices into `points`.
fn spread_picks(points: &[Vec<f64>], h: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut picks = vec![rng.gen_range(0..points.len())];
    let mut nearest: Vec<f64> = points.iter().map(|p| dist_sq(p, &points[picks[0]])).collect();
    while picks.len() < h.min(points.len()) {
        let total: f64 = nearest.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut next = nearest.iter().rposition(|&d| d > 0.0).expect("positive total");
        for (i, &d) in nearest.iter().enumerate() {
            if d > 0.0 && target < d {
                next = i;
                break;
            }
            target -= d;
        }
        picks.push(next);
        for (n, p) in nearest.iter_mut().zip(points) {
            *n = n.min(dist_sq(p, &points[next]));
        }
    }
    picks
}

/// Trains `variant` on every user of `bundle` with a single worker.
pub fn train(bundle: &DatasetBundle, hyper: &Hyperparams, variant: Variant) -> Result<ModelState> {
    train_with_workers(bundle, hyper, variant, 1)
}

/// As [`train`], running Step A on `workers` threads. Results do not depend
/// on the worker count.
pub fn train_with_workers(
    bundle: &DatasetBundle,
    hyper: &Hyperparams,
    variant: Variant,
    workers: usize,
) -> Result<ModelState> {
    if bundle.users.is_empty() {
        return Err(Error::InvalidArgument("no users to train on".into()));
    }
    bundle.validate()?;
    let mut hyper = hyper.clone();
    if variant == Variant::Bhlr {
        hyper.h = 1;
    }
    hyper.validate(variant)?;
    let workers = Workers::new(workers)?;
    let users = &bundle.users;
    let k = bundle.num_features;

    if variant == Variant::L2lr {
        let fits = l2lr_profiles(users, k, &hyper, &workers)?;
        let total = fits.iter().map(|(_, v)| v).sum();
        let profiles = users
            .iter()
            .zip(fits)
            .map(|(u, (w, _))| UserProfile {
                user_id: u.user_id.clone(),
                w,
                lambda: vec![0.0; hyper.h],
                cluster: None,
            })
            .collect();
        return Ok(ModelState {
            variant,
            hyper,
            factors: None,
            profiles,
            objective_trace: vec![total],
            vocab_fingerprint: bundle.vocab_fingerprint.clone(),
        });
    }

    let mut state = ModelState {
        variant,
        factors: Some(initial_factors_with(users, k, &hyper, &workers)?),
        profiles: users
            .iter()
            .map(|u| UserProfile {
                user_id: u.user_id.clone(),
                w: vec![0.0; k],
                lambda: vec![0.0; hyper.h],
                cluster: None,
            })
            .collect(),
        objective_trace: Vec::new(),
        vocab_fingerprint: bundle.vocab_fingerprint.clone(),
        hyper,
    };
    let hyper = state.hyper.clone();
    let mut previous = full_objective(&state, users)?;

    for iter in 0..hyper.max_outer_iters {
        let factors = state.factors.as_ref().expect("factor variants keep Λ");
        let fits: Vec<UserFit> = match variant {
            Variant::DfpmNorm => {
                let solver = LambdaSolver::new(factors, hyper.c1, hyper.c2)?;
                let prev = &state.profiles;
                // The first pass starts every user from w = 0, λ = 0; later passes
                // resume from the previous iterate so each block step is a descent step.
                workers.map(users, |i, u| {
                    let warm = (prev[i].w.as_slice(), prev[i].lambda.as_slice());
                    fit_user_norm_from(factors, &solver, u, &hyper, Some(warm))
                })?
            }
            Variant::DfpmMult | Variant::Bhlr => {
                workers.map(users, |_, u| fit_user_mult(factors, u, &hyper))?
            }
            Variant::L2lr => unreachable!(),
        };
        for (p, fit) in state.profiles.iter_mut().zip(fits) {
            p.w = fit.w;
            p.lambda = fit.lambda;
            p.cluster = fit.cluster;
        }
        state.factors = Some(update_factor_matrix(&state.profiles, &hyper, k)?);
        let value = full_objective(&state, users)?;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                step: iter,
                value,
                point: Vec::new(),
            });
        }
        state.objective_trace.push(value);
        let change = rel_change(previous, value);
        debug!("outer iteration {}: objective {value:.6} (rel change {change:.2e})", iter + 1);
        previous = value;
        if change < hyper.outer_rel_tolerance {
            break;
        }
    }
    info!(
        "{variant}: {} outer iterations, final objective {:.6}",
        state.objective_trace.len(),
        previous
    );
    Ok(state)
}
