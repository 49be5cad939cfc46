use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::dense::DenseNet;
use crate::error::{Error, Result};

pub const MIN_PROBES: usize = 10;

/// A differentiable scalar loss over a flat parameter vector.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn loss(&self, theta: &[f64]) -> Result<f64>;
    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>>;
}

/// Training loss of a network as a function of its weights (biases held
/// fixed).
pub struct NetObjective<'a> {
    net: &'a DenseNet,
    data: &'a Dataset,
}

impl<'a> NetObjective<'a> {
    pub fn new(net: &'a DenseNet, data: &'a Dataset) -> Self {
        Self { net, data }
    }

    fn at(&self, theta: &[f64]) -> Result<DenseNet> {
        let mut net = self.net.clone();
        net.set_weights_flat(theta)?;
        Ok(net)
    }
}

impl Objective for NetObjective<'_> {
    fn dim(&self) -> usize {
        self.net.weight_count()
    }

    fn loss(&self, theta: &[f64]) -> Result<f64> {
        self.at(theta)?.loss(self.data, self.data.train())
    }

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let (_, g) = self.at(theta)?.loss_and_gradient(self.data, self.data.train())?;
        Ok(g.weights_flat())
    }
}

/// `L(theta) = 0.5 (theta - c)^T A (theta - c)` with symmetric `A`
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    matrix: Vec<f64>,
    center: Vec<f64>,
}

impl Quadratic {
    pub fn new(matrix: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        let n = center.len();
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} matrix entries for dimension {n}",
                matrix.len()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if matrix[i * n + j] != matrix[j * n + i] {
                    return Err(Error::Domain(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { matrix, center })
    }

    pub fn diagonal(diag: &[f64], center: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        let mut m = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            m[i * n + i] = *d;
        }
        Self::new(m, center)
    }

    pub fn trace(&self) -> f64 {
        let n = self.center.len();
        (0..n).map(|i| self.matrix[i * n + i]).sum()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.center.len();
        (0..n)
            .map(|i| self.matrix[i * n..(i + 1) * n].iter().zip(x).map(|(a, v)| a * v).sum())
            .collect()
    }

    fn offset(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.center.len() {
            return Err(Error::LengthMismatch {
                expected: self.center.len(),
                actual: theta.len(),
            });
        }
        Ok(theta.iter().zip(&self.center).map(|(t, c)| t - c).collect())
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn loss(&self, theta: &[f64]) -> Result<f64> {
        let d = self.offset(theta)?;
        Ok(0.5 * d.iter().zip(self.apply(&d)).map(|(a, b)| a * b).sum::<f64>())
    }

    fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply(&self.offset(theta)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub probes: usize,
}

/// Finite-difference step `1e-4 (1 + max|theta|)`.
pub fn fd_step(theta: &[f64]) -> f64 {
    1e-4 * (1.0 + theta.iter().fold(0.0f64, |m, t| m.max(t.abs())))
}

/// `H v` by central differences of the gradient.
pub fn hessian_vector_product<O: Objective + ?Sized>(obj: &O, theta: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>> {
    let shifted = |sign: f64| -> Vec<f64> { theta.iter().zip(v).map(|(t, d)| t + sign * h * d).collect() };
    let up = obj.gradient(&shifted(1.0))?;
    let down = obj.gradient(&shifted(-1.0))?;
    Ok(up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// Hutchinson estimate of `Tr(H)` at `theta` from Rademacher probes. Probe
/// `p` draws from stream `p` of a ChaCha8 generator keyed by `seed`, so the
/// result does not depend on thread scheduling.
pub fn hutchinson_trace<O: Objective + ?Sized>(obj: &O, theta: &[f64], probes: usize, seed: u64) -> Result<TraceEstimate> {
    if probes < MIN_PROBES {
        return Err(Error::Domain(format!("need at least {MIN_PROBES} probes, got {probes}")));
    }
    if theta.len() != obj.dim() {
        return Err(Error::LengthMismatch {
            expected: obj.dim(),
            actual: theta.len(),
        });
    }
    let h = fd_step(theta);
    let samples = (0..probes)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let v: Vec<f64> = (0..theta.len())
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let hv = hessian_vector_product(obj, theta, &v, h)?;
            Ok(v.iter().zip(&hv).map(|(a, b)| a * b).sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = probes as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std_error = (var / n).sqrt();
    if !mean.is_finite() || !std_error.is_finite() {
        return Err(Error::NonFiniteEstimate);
    }
    Ok(TraceEstimate {
        mean,
        std_error,
        probes,
    })
}

/// `Tr(H)` of the training loss with respect to the network weights.
pub fn estimate_trace_h(net: &DenseNet, data: &Dataset, probes: usize, seed: u64) -> Result<TraceEstimate> {
    hutchinson_trace(&NetObjective::new(net, data), &net.weights_flat(), probes, seed)
}
