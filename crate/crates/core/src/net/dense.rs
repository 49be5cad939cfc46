use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::error::{Error, Result};

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

/// ReLU MLP with a softmax cross-entropy head.
///
/// Flat parameter order is, per layer, the weights followed by the bias.
/// Weight-only vectors concatenate the layer weights in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    layers: Vec<DenseLayer>,
}

/// Per-layer gradients, same shapes as the layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradient {
    fn zeros(net: &DenseNet) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn weights_flat(&self) -> Vec<f64> {
        self.weights.concat()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .flat_map(|(w, b)| w.iter().chain(b))
            .copied()
            .collect()
    }
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

impl DenseNet {
    /// He-uniform weights, zero biases.
    pub fn new(arch: &[usize], seed: u64) -> Result<Self> {
        if arch.len() < 2 || arch.contains(&0) {
            return Err(Error::DimensionMismatch(format!("invalid architecture {arch:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = arch
            .windows(2)
            .map(|w| {
                let limit = (6.0 / w[0] as f64).sqrt();
                DenseLayer {
                    inputs: w[0],
                    outputs: w[1],
                    weights: (0..w[0] * w[1]).map(|_| rng.random_range(-limit..limit)).collect(),
                    bias: vec![0.0; w[1]],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::DimensionMismatch("no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.inputs == 0 || l.outputs == 0 || l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::DimensionMismatch(format!("layer {i} has inconsistent shapes")));
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(Error::DimensionMismatch(format!("layer {i} does not chain")));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn arch(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len()).sum()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn weights_flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().copied()).collect()
    }

    pub fn set_weights_flat(&mut self, w: &[f64]) -> Result<()> {
        if w.len() != self.weight_count() {
            return Err(Error::LengthMismatch {
                expected: self.weight_count(),
                actual: w.len(),
            });
        }
        let mut at = 0;
        for l in &mut self.layers {
            let n = l.weights.len();
            l.weights.copy_from_slice(&w[at..at + n]);
            at += n;
        }
        Ok(())
    }

    pub fn params_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params_flat(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                actual: p.len(),
            });
        }
        let mut at = 0;
        for l in &mut self.layers {
            let (nw, nb) = (l.weights.len(), l.bias.len());
            l.weights.copy_from_slice(&p[at..at + nw]);
            l.bias.copy_from_slice(&p[at + nw..at + nw + nb]);
            at += nw + nb;
        }
        Ok(())
    }

    /// Pre-activations of every layer for one input.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = x.to_vec();
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(l.outputs);
            l.forward(&act, &mut z);
            if i + 1 < self.layers.len() {
                act = z.iter().map(|v| v.max(0.0)).collect();
            }
            pre.push(z);
        }
        pre
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward_all(x).pop().expect("at least one layer")
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let z = self.logits(x);
        (0..z.len()).fold(0, |best, i| if z[i] > z[best] { i } else { best })
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        let arch = self.arch();
        if data.dim() != arch[0] || data.classes() > *arch.last().unwrap() {
            return Err(Error::DimensionMismatch(format!(
                "network {arch:?} cannot take {}-dim inputs with {} classes",
                data.dim(),
                data.classes()
            )));
        }
        Ok(())
    }

    /// Mean cross-entropy over `indices`.
    pub fn loss(&self, data: &Dataset, indices: &[usize]) -> Result<f64> {
        self.check_data(data)?;
        if indices.is_empty() {
            return Err(Error::Domain("loss over an empty index set".into()));
        }
        let total: f64 = indices
            .iter()
            .map(|&i| -log_softmax(&self.logits(data.sample(i)))[data.label(i)])
            .sum();
        Ok(total / indices.len() as f64)
    }

    pub fn accuracy(&self, data: &Dataset, indices: &[usize]) -> Result<f64> {
        self.check_data(data)?;
        if indices.is_empty() {
            return Err(Error::Domain("accuracy over an empty index set".into()));
        }
        let hits = indices
            .iter()
            .filter(|&&i| self.predict(data.sample(i)) == data.label(i))
            .count();
        Ok(hits as f64 / indices.len() as f64)
    }

    /// Mean cross-entropy and its gradient over `indices`.
    pub fn loss_and_gradient(&self, data: &Dataset, indices: &[usize]) -> Result<(f64, Gradient)> {
        self.check_data(data)?;
        if indices.is_empty() {
            return Err(Error::Domain("gradient over an empty index set".into()));
        }
        let mut grad = Gradient::zeros(self);
        let mut loss = 0.0;
        let depth = self.layers.len();
        for &s in indices {
            let x = data.sample(s);
            let pre = self.forward_all(x);
            let logp = log_softmax(&pre[depth - 1]);
            loss -= logp[data.label(s)];
            let mut delta: Vec<f64> = logp.iter().map(|v| v.exp()).collect();
            delta[data.label(s)] -= 1.0;
            for li in (0..depth).rev() {
                let layer = &self.layers[li];
                let input: Vec<f64> = if li == 0 {
                    x.to_vec()
                } else {
                    pre[li - 1].iter().map(|v| v.max(0.0)).collect()
                };
                for o in 0..layer.outputs {
                    grad.bias[li][o] += delta[o];
                    let row = &mut grad.weights[li][o * layer.inputs..(o + 1) * layer.inputs];
                    for (g, v) in row.iter_mut().zip(&input) {
                        *g += delta[o] * v;
                    }
                }
                if li > 0 {
                    delta = (0..layer.inputs)
                        .map(|j| {
                            if pre[li - 1][j] > 0.0 {
                                (0..layer.outputs).map(|o| layer.weights[o * layer.inputs + j] * delta[o]).sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        let scale = 1.0 / indices.len() as f64;
        grad.weights.iter_mut().chain(&mut grad.bias).flatten().for_each(|g| *g *= scale);
        Ok((loss * scale, grad))
    }
}
