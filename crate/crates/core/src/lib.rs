//! Discriminative factored prior models (DFPM) for content-based recommendation.
//!
//! Each user owns a logistic-regression profile `w_m` whose Gaussian prior mean
//! is a user-specific mixture `Λ λ_m` of shared hidden factors. Training
//! alternates per-user profile fits with a closed-form update of the factor
//! matrix. Two flavours of the mixing vector are supported: one-hot
//! (`DFPM-Mult`, hard user clusters) and Gaussian (`DFPM-Norm`, multiple
//! interests per user). The independent L2 logistic regression and
//! single-prior hierarchical logistic regression baselines are provided as
//! well.
//!
//! Modules:
//!
//! * [`corpus`] - tokenization, vocabulary, TF-IDF vectors, negative sampling, splits
//! * [`solver`] - nonlinear conjugate gradient and the anchored logistic objective
//! * [`models`] - the four trainable models and model persistence
//! * [`evaluation`] - precision/recall/macro-F1, user groups, t-test, factor inspection
//! * [`synthetic`] - data drawn from the generative model, plus verification oracles

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod solver;
pub mod synthetic;

pub use error::{Error, Result};
