use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Hyperparams, UserProfile};
use crate::corpus::SparseVector;
use crate::linalg::Cholesky;
use crate::{Error, Result};

/// `K×H` matrix whose columns are the hidden factors. Stored row-major so a
/// sparse feature vector touches contiguous rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FactorMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols == 0 {
            return Err(Error::InvalidArgument("factor matrix needs H >= 1".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "factor matrix entries".into(),
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "factor matrix has non-finite entries".into(),
            ));
        }
        Ok(FactorMatrix { rows, cols, data })
    }

    /// Builds from `H` columns of length `K`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = vec![0.0; rows * cols];
        for (c, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::DimensionMismatch {
                    what: format!("factor column {c}"),
                    expected: rows,
                    actual: col.len(),
                });
            }
            for (r, v) in col.iter().enumerate() {
                data[r * cols + c] = *v;
            }
        }
        FactorMatrix::from_row_major(rows, cols, data)
    }

    /// K
    pub fn num_features(&self) -> usize {
        self.rows
    }

    /// H
    pub fn num_factors(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// `Λ λ`
    pub fn mul_vec(&self, lambda: &[f64]) -> Vec<f64> {
        debug_assert_eq!(lambda.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(lambda).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Λᵀ w`
    pub fn transpose_mul(&self, w: &[f64]) -> Vec<f64> {
        debug_assert_eq!(w.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (row, wr) in self.data.chunks_exact(self.cols).zip(w) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * wr;
            }
        }
        out
    }

    /// `Λᵀ x` for a sparse `x`: one score per factor.
    pub fn column_scores(&self, x: &SparseVector) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for &(i, v) in x.entries() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * v;
            }
        }
        out
    }

    /// `ΛᵀΛ`, row-major `H×H`.
    pub fn gram(&self) -> Vec<f64> {
        let h = self.cols;
        let mut g = vec![0.0; h * h];
        for row in self.data.chunks_exact(h) {
            for a in 0..h {
                for b in 0..=a {
                    g[a * h + b] += row[a] * row[b];
                }
            }
        }
        for a in 0..h {
            for b in 0..a {
                g[b * h + a] = g[a * h + b];
            }
        }
        g
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    fn rows_nested(&self) -> Vec<Vec<f64>> {
        self.data.chunks_exact(self.cols).map(<[f64]>::to_vec).collect()
    }
}

impl Serialize for FactorMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows_nested().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FactorMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("ragged factor matrix rows"));
        }
        let n = rows.len();
        FactorMatrix::from_row_major(n, cols, rows.concat()).map_err(serde::de::Error::custom)
    }
}

/// Closed-form mixing-vector update for a fixed `Λ`: the minimizer of
/// `c1‖w − Λλ‖² + c2‖λ‖²`, i.e. `λ = (ΛᵀΛ + (c2/c1) I)⁻¹ Λᵀ w`.
///
/// The `H×H` system is factored once and reused for every user.
#[derive(Debug, Clone)]
pub struct LambdaSolver {
    chol: Cholesky,
}

impl LambdaSolver {
    pub fn new(factors: &FactorMatrix, c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0) || !(c2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda update needs c1 > 0 and c2 >= 0 (got c1={c1}, c2={c2})"
            )));
        }
        let h = factors.num_factors();
        let mut a = factors.gram();
        let ridge = c2 / c1;
        for i in 0..h {
            a[i * h + i] += ridge;
        }
        Ok(LambdaSolver {
            chol: Cholesky::factor(&a, h)?,
        })
    }

    pub fn solve(&self, factors: &FactorMatrix, w: &[f64]) -> Vec<f64> {
        self.chol.solve(&factors.transpose_mul(w))
    }
}

pub fn solve_lambda_norm(factors: &FactorMatrix, w: &[f64], c1: f64, c2: f64) -> Result<Vec<f64>> {
    if w.len() != factors.num_features() {
        return Err(Error::DimensionMismatch {
            what: "profile length".into(),
            expected: factors.num_features(),
            actual: w.len(),
        });
    }
    Ok(LambdaSolver::new(factors, c1, c2)?.solve(factors, w))
}

fn one_hot_index(lambda: &[f64]) -> Option<usize> {
    let mut hot = None;
    for (i, &v) in lambda.iter().enumerate() {
        if v == 1.0 && hot.is_none() {
            hot = Some(i);
        } else if v != 0.0 {
            return None;
        }
    }
    hot
}

/// Closed-form factor update: row `r` of `Λ` is
/// `(Σ_m λ_m λ_mᵀ + (c3/c1) I)⁻¹ Σ_m w_{m,r} λ_m`.
///
/// When every `λ_m` is one-hot the system is diagonal and each entry is a
/// shrunken cluster mean. Profiles are reduced in slice order, so the result
/// does not depend on how they were computed.
pub fn update_factor_matrix(
    profiles: &[UserProfile],
    hyper: &Hyperparams,
    k: usize,
) -> Result<FactorMatrix> {
    let h = hyper.h;
    if !(hyper.c1 > 0.0) || !(hyper.c3 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "factor update needs c1 > 0 and c3 > 0 (got c1={}, c3={})",
            hyper.c1, hyper.c3
        )));
    }
    for p in profiles {
        if p.lambda.len() != h {
            return Err(Error::DimensionMismatch {
                what: format!("lambda of user {}", p.user_id),
                expected: h,
                actual: p.lambda.len(),
            });
        }
        if p.w.len() != k {
            return Err(Error::DimensionMismatch {
                what: format!("profile of user {}", p.user_id),
                expected: k,
                actual: p.w.len(),
            });
        }
    }
    let ridge = hyper.c3 / hyper.c1;
    let mut out = FactorMatrix::zeros(k, h);

    let hot: Option<Vec<usize>> = profiles.iter().map(|p| one_hot_index(&p.lambda)).collect();
    if let Some(hot) = hot {
        let mut counts = vec![0.0; h];
        for (p, &c) in profiles.iter().zip(&hot) {
            counts[c] += 1.0;
            for (r, wr) in p.w.iter().enumerate() {
                out.data[r * h + c] += wr;
            }
        }
        for row in out.data.chunks_exact_mut(h) {
            for (v, n) in row.iter_mut().zip(&counts) {
                *v /= n + ridge;
            }
        }
        return Ok(out);
    }

    let mut a = vec![0.0; h * h];
    for p in profiles {
        for i in 0..h {
            for j in 0..h {
                a[i * h + j] += p.lambda[i] * p.lambda[j];
            }
        }
        for (r, wr) in p.w.iter().enumerate() {
            if *wr != 0.0 {
                for (o, l) in out.data[r * h..(r + 1) * h].iter_mut().zip(&p.lambda) {
                    *o += wr * l;
                }
            }
        }
    }
    for i in 0..h {
        a[i * h + i] += ridge;
    }
    let chol = Cholesky::factor(&a, h)?;
    for row in out.data.chunks_exact_mut(h) {
        chol.solve_in_place(row);
    }
    Ok(out)
}
