use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::dense::DenseNet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.05,
            batch_size: 32,
            momentum: 0.9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub net: DenseNet,
    /// Training loss after each epoch.
    pub history: Vec<f64>,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
}

/// Mini-batch SGD with heavy-ball momentum (`v <- m v + g`, `theta <- theta - lr v`).
/// Each epoch visits the training indices in a fresh seeded shuffle.
pub fn train(net: &DenseNet, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if !(cfg.learning_rate >= 0.0) || !(0.0..1.0).contains(&cfg.momentum) || cfg.batch_size == 0 {
        return Err(Error::Domain(format!(
            "invalid config: lr {}, momentum {}, batch {}",
            cfg.learning_rate, cfg.momentum, cfg.batch_size
        )));
    }
    if data.train().is_empty() {
        return Err(Error::Domain("empty training split".into()));
    }
    let mut net = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = net.params_flat();
    let mut velocity = vec![0.0; theta.len()];
    let mut order = data.train().to_vec();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grad) = net.loss_and_gradient(data, batch)?;
            if !loss.is_finite() {
                return Err(Error::DivergenceDetected { epoch, loss });
            }
            for ((t, v), g) in theta.iter_mut().zip(&mut velocity).zip(grad.params_flat()) {
                *v = cfg.momentum * *v + g;
                *t -= cfg.learning_rate * *v;
            }
            if theta.iter().any(|t| !t.is_finite()) {
                return Err(Error::DivergenceDetected { epoch, loss: f64::NAN });
            }
            net.set_params_flat(&theta)?;
        }
        let loss = net.loss(data, data.train())?;
        if !loss.is_finite() {
            return Err(Error::DivergenceDetected { epoch, loss });
        }
        history.push(loss);
    }

    let train_loss = net.loss(data, data.train())?;
    let test_loss = match data.test() {
        [] => None,
        test => Some(net.loss(data, test)?),
    };
    Ok(TrainOutcome {
        net,
        history,
        train_loss,
        test_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::data::blobs;

    #[test]
    fn zero_epochs_and_zero_rate_change_nothing() {
        let data = blobs(20, 2, 2, 0.5, 4).unwrap();
        let net = DenseNet::new(&[2, 8, 2], 1).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let out = train(&net, &data, &cfg).unwrap();
        assert_eq!(out.net, net);
        assert!(out.history.is_empty());

        let cfg = TrainConfig {
            epochs: 5,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let out = train(&net, &data, &cfg).unwrap();
        assert_eq!(out.net, net);
        let l0 = net.loss(&data, data.train()).unwrap();
        assert!(out.history.iter().all(|&l| l == l0));
    }

    #[test]
    fn deterministic_given_seed() {
        let data = blobs(20, 3, 2, 0.6, 9).unwrap();
        let net = DenseNet::new(&[2, 6, 3], 2).unwrap();
        let cfg = TrainConfig {
            epochs: 10,
            seed: 5,
            ..TrainConfig::default()
        };
        let a = train(&net, &data, &cfg).unwrap();
        let b = train(&net, &data, &cfg).unwrap();
        assert_eq!(a.net.params_flat(), b.net.params_flat());
        let c = train(&net, &data, &TrainConfig { seed: 6, ..cfg }).unwrap();
        assert_ne!(a.net.params_flat(), c.net.params_flat());
        assert!(a.train_loss < net.loss(&data, data.train()).unwrap());
    }

    #[test]
    fn huge_rate_diverges() {
        let data = blobs(20, 2, 2, 0.5, 4).unwrap();
        let net = DenseNet::new(&[2, 8, 2], 1).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            learning_rate: 1e200,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&net, &data, &cfg), Err(Error::DivergenceDetected { .. })));
    }
}
