use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::dense::DenseNet;
use crate::bounds::{epsilon_bound_asymptotic, epsilon_bound_lemma, LossBoundInputs};
use crate::error::{Error, Result};
use crate::partition::{emp_decide_partitioned, Partition};
use crate::rule::{emp_decide, ScoreVector};

/// Whether EMP sees all weights at once or one layer at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PruneMode {
    Global,
    Block,
}

impl fmt::Display for PruneMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PruneMode::Global => "global",
            PruneMode::Block => "block",
        })
    }
}

impl FromStr for PruneMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(PruneMode::Global),
            "block" => Ok(PruneMode::Block),
            other => Err(Error::Parse(format!("unknown prune mode {other:?}"))),
        }
    }
}

/// Position of a flat weight inside the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightIndex {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeScores {
    /// `|w|` over all weights, biases excluded.
    pub scores: ScoreVector,
    /// `index[i]` locates flat weight `i`.
    pub index: Vec<WeightIndex>,
    /// One contiguous group per weight matrix.
    pub layers: Partition,
}

pub fn magnitude_scores(net: &DenseNet) -> MagnitudeScores {
    let mut index = Vec::with_capacity(net.weight_count());
    for (layer, l) in net.layers().iter().enumerate() {
        for row in 0..l.outputs {
            for col in 0..l.inputs {
                index.push(WeightIndex { layer, row, col });
            }
        }
    }
    let sizes: Vec<usize> = net.layers().iter().map(|l| l.weights.len()).collect();
    MagnitudeScores {
        scores: ScoreVector::new(net.weights_flat().iter().map(|w| w.abs()).collect())
            .expect("network weights are finite"),
        index,
        layers: Partition::contiguous(&sizes).expect("layers are non-empty"),
    }
}

/// Keep-mask over the flat weights.
pub fn prune_mask(net: &DenseNet, mode: PruneMode, beta: f64) -> Result<Vec<bool>> {
    let m = magnitude_scores(net);
    Ok(match mode {
        PruneMode::Global => emp_decide(&m.scores, beta)?.mask,
        PruneMode::Block => emp_decide_partitioned(&m.scores, &m.layers, beta)?.global_mask(),
    })
}

/// Zeroes weights where `mask` is false. Biases are untouched.
pub fn apply_mask(net: &DenseNet, mask: &[bool]) -> Result<DenseNet> {
    if mask.len() != net.weight_count() {
        return Err(Error::LengthMismatch {
            expected: net.weight_count(),
            actual: mask.len(),
        });
    }
    let w: Vec<f64> = net
        .weights_flat()
        .iter()
        .zip(mask)
        .map(|(&w, &keep)| if keep { w } else { 0.0 })
        .collect();
    let mut out = net.clone();
    out.set_weights_flat(&w)?;
    Ok(out)
}

/// `||theta_a - theta_b||^2` over the weights.
pub fn delta_theta_sq(a: &DenseNet, b: &DenseNet) -> Result<f64> {
    let (wa, wb) = (a.weights_flat(), b.weights_flat());
    if wa.len() != wb.len() {
        return Err(Error::LengthMismatch {
            expected: wa.len(),
            actual: wb.len(),
        });
    }
    Ok(wa.iter().zip(&wb).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Sum of squared weights where `mask` is false.
pub fn dropped_weight_sq(net: &DenseNet, mask: &[bool]) -> f64 {
    net.weights_flat()
        .iter()
        .zip(mask)
        .filter(|(_, &keep)| !keep)
        .map(|(w, _)| w * w)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneExperimentResult {
    pub beta: f64,
    pub mode: PruneMode,
    /// Number of prunable weights.
    pub n: usize,
    pub keep_count: usize,
    /// `keep_count / n`.
    pub rho: f64,
    /// `1 - keep_count / n`.
    pub sparsity: f64,
    pub dense_loss: f64,
    pub pruned_loss: f64,
    /// `|dense_loss - pruned_loss|` on the training split.
    pub epsilon: f64,
    pub dense_acc: f64,
    pub pruned_acc: f64,
    pub theta_l1: f64,
    pub delta_theta_sq: f64,
    pub trace_h_estimate: Option<f64>,
    pub lemma_bound: Option<f64>,
    pub asymptotic_bound: Option<f64>,
}

fn accuracy_split(data: &Dataset) -> &[usize] {
    if data.test().is_empty() {
        data.train()
    } else {
        data.test()
    }
}

/// Prunes once and measures the training-loss change and test accuracy.
pub fn run_experiment(
    net: &DenseNet,
    data: &Dataset,
    mode: PruneMode,
    beta: f64,
    trace_h: Option<f64>,
) -> Result<PruneExperimentResult> {
    let mask = prune_mask(net, mode, beta)?;
    let pruned = apply_mask(net, &mask)?;
    let n = mask.len();
    let keep_count = mask.iter().filter(|&&m| m).count();
    let dense_loss = net.loss(data, data.train())?;
    let pruned_loss = pruned.loss(data, data.train())?;
    let eval = accuracy_split(data);
    let mut result = PruneExperimentResult {
        beta,
        mode,
        n,
        keep_count,
        rho: keep_count as f64 / n as f64,
        sparsity: 1.0 - keep_count as f64 / n as f64,
        dense_loss,
        pruned_loss,
        epsilon: (dense_loss - pruned_loss).abs(),
        dense_acc: net.accuracy(data, eval)?,
        pruned_acc: pruned.accuracy(data, eval)?,
        theta_l1: net.weights_flat().iter().map(|w| w.abs()).sum(),
        delta_theta_sq: delta_theta_sq(net, &pruned)?,
        trace_h_estimate: None,
        lemma_bound: None,
        asymptotic_bound: None,
    };
    if let Some(t) = trace_h {
        let gap = evaluate_bound_gap(&result, t, 1.0)?;
        result.trace_h_estimate = Some(t);
        result.lemma_bound = Some(gap.lemma_bound);
        result.asymptotic_bound = Some(gap.asymptotic_bound);
    }
    Ok(result)
}

/// One row per `(beta, mode)` pair, betas outermost. Cells run in parallel.
pub fn beta_sweep(
    net: &DenseNet,
    data: &Dataset,
    betas: &[f64],
    modes: &[PruneMode],
    trace_h: Option<f64>,
) -> Result<Vec<PruneExperimentResult>> {
    let cells: Vec<(f64, PruneMode)> = betas
        .iter()
        .flat_map(|&b| modes.iter().map(move |&m| (b, m)))
        .collect();
    cells
        .par_iter()
        .map(|&(beta, mode)| run_experiment(net, data, mode, beta, trace_h))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundGapReport {
    pub epsilon: f64,
    pub trace_h: f64,
    pub lemma_bound: f64,
    pub asymptotic_bound: f64,
    pub slack_factor: f64,
    /// `epsilon > slack_factor * lemma_bound`. Reported, not enforced.
    pub exceeds: bool,
}

/// Loss-change bounds for a measured result. With nothing pruned both
/// bounds take their limiting value 0.
pub fn evaluate_bound_gap(result: &PruneExperimentResult, trace_h: f64, slack_factor: f64) -> Result<BoundGapReport> {
    let (lemma_bound, asymptotic_bound) = if result.keep_count == result.n {
        (0.0, 0.0)
    } else {
        let inp = LossBoundInputs {
            rho: result.rho,
            n: result.n,
            theta_l1: result.theta_l1,
            trace_h,
            delta_theta_sq: Some(result.delta_theta_sq),
        };
        (epsilon_bound_lemma(&inp)?, epsilon_bound_asymptotic(&inp)?)
    };
    Ok(BoundGapReport {
        epsilon: result.epsilon,
        trace_h,
        lemma_bound,
        asymptotic_bound,
        slack_factor,
        exceeds: result.epsilon > slack_factor * lemma_bound,
    })
}
