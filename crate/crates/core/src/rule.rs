//! The effective-number pruning rule.
//!
//! Scores are mapped onto the probability simplex by their absolute values,
//! the inverse Simpson index of that distribution gives the effective number
//! `n_eff`, and the `floor(beta * n_eff)` largest-magnitude entries (clipped
//! to `[1, N]`) are kept.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the coordinate sum of a [`SimplexPoint`].
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;

/// When `1 / sum(w^2)` sits this close below an integer it is rounded up
/// before flooring, so that the uniform distribution yields exactly `N`.
pub const NEFF_ROUND_UP_TOL: f64 = 1e-9;

/// Raw per-entry pruning scores. Values must be finite; signs are ignored by
/// every decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyScoreVector);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteScore { index, value });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// Scores restricted to `indices`, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(indices.len());
        for &i in indices {
            let v = *self.0.get(i).ok_or(Error::IndexOutOfRange {
                index: i,
                len: self.0.len(),
            })?;
            out.push(v);
        }
        Self::new(out)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for ScoreVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ScoreVector> for Vec<f64> {
    fn from(s: ScoreVector) -> Self {
        s.0
    }
}

/// A point of the standard simplex: nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPoint {
    weights: Vec<f64>,
    sorted_descending: bool,
}

impl SimplexPoint {
    /// Validates `weights` as a simplex point. The sorted flag is set only if
    /// the weights are actually non-increasing.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSimplexPoint("no coordinates".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidSimplexPoint(format!("bad coordinate {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidSimplexPoint(format!("coordinates sum to {sum}")));
        }
        Ok(Self {
            weights,
            sorted_descending: false,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_sorted_descending(&self) -> bool {
        self.sorted_descending
    }

    /// The same point moved into the ordered simplex.
    pub fn sorted(&self) -> Self {
        let mut weights = self.weights.clone();
        weights.sort_by(|a, b| b.total_cmp(a));
        Self {
            weights,
            sorted_descending: true,
        }
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}

/// `w_i = |s_i| / sum_j |s_j|`, in input order.
pub fn normalize(s: &ScoreVector) -> Result<SimplexPoint> {
    let total = s.l1_norm();
    if total == 0.0 {
        return Err(Error::ZeroScoreVector { group: None });
    }
    let weights = s.values().iter().map(|v| v.abs() / total).collect();
    Ok(SimplexPoint {
        weights,
        sorted_descending: false,
    })
}

/// `floor(1 / sum(w^2))`, clamped to `[1, N]`.
pub fn effective_number(w: &SimplexPoint) -> usize {
    effective_number_from_sum_sq(w.sum_of_squares(), w.len())
}

/// Effective number from a precomputed `sum(w^2)` over `n` coordinates.
pub fn effective_number_from_sum_sq(sum_sq: f64, n: usize) -> usize {
    let inv = 1.0 / sum_sq;
    let up = inv.ceil();
    let floored = if up - inv < NEFF_ROUND_UP_TOL { up } else { inv.floor() };
    (floored as usize).clamp(1, n.max(1))
}

/// `clip(floor(beta * n_eff), 1, n)`.
pub fn keep_count(n_eff: usize, beta: f64, n: usize) -> usize {
    let scaled = (beta * n_eff as f64).floor();
    if scaled < 1.0 {
        1
    } else if scaled >= n as f64 {
        n
    } else {
        scaled as usize
    }
}

/// Sum of the `k` largest weights; exactly `1.0` when `k == N`.
pub fn retained_mass(w: &SimplexPoint, k: usize) -> Result<f64> {
    let n = w.len();
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange { index: k, len: n });
    }
    if k == n {
        return Ok(1.0);
    }
    if w.sorted_descending {
        return Ok(w.weights[..k].iter().sum());
    }
    let order = top_k_indices(w.weights(), k);
    Ok(order.iter().map(|&i| w.weights[i]).sum())
}

/// Indices of the `k` largest values, ties broken by lower index, returned in
/// descending value order.
pub(crate) fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let by_rank = |a: &usize, b: &usize| -> Ordering {
        values[*b].total_cmp(&values[*a]).then_with(|| a.cmp(b))
    };
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k, by_rank);
        idx.truncate(k);
    }
    idx.sort_unstable_by(by_rank);
    idx
}

/// Outcome of one EMP decision over a score vector of length `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpDecision {
    pub n: usize,
    pub n_eff: usize,
    pub beta: f64,
    pub keep_count: usize,
    pub s_eff: f64,
    pub mask: Vec<bool>,
    /// Kept positions in ascending index order.
    pub kept_indices: Vec<usize>,
}

impl EmpDecision {
    /// Fraction of dropped entries, `1 - keep_count / n`.
    pub fn sparsity(&self) -> f64 {
        1.0 - self.keep_count as f64 / self.n as f64
    }

    pub fn dropped_count(&self) -> usize {
        self.n - self.keep_count
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveBeta(beta))
    }
}

/// Runs the full rule on `s` with scale coefficient `beta`.
pub fn emp_decide(s: &ScoreVector, beta: f64) -> Result<EmpDecision> {
    check_beta(beta)?;
    let w = normalize(s)?;
    let n = w.len();
    let n_eff = effective_number(&w);
    let k = keep_count(n_eff, beta, n);

    let magnitudes: Vec<f64> = s.values().iter().map(|v| v.abs()).collect();
    let mut kept = top_k_indices(&magnitudes, k);
    let s_eff = if k == n {
        1.0
    } else {
        kept.iter().map(|&i| w.weights[i]).sum()
    };
    kept.sort_unstable();

    let mut mask = vec![false; n];
    for &i in &kept {
        mask[i] = true;
    }
    Ok(EmpDecision {
        n,
        n_eff,
        beta,
        keep_count: k,
        s_eff,
        mask,
        kept_indices: kept,
    })
}

/// Elementwise `min(|a_i|, |b_i|)`.
pub fn combine_min(a: &ScoreVector, b: &ScoreVector) -> Result<ScoreVector> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x.abs().min(y.abs()))
        .collect();
    ScoreVector::new(values)
}
