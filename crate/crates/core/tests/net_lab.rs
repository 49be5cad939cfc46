use std::path::PathBuf;

use emp_core::net::{
    apply_mask, beta_sweep, blobs, delta_theta_sq, dropped_weight_sq, estimate_trace_h, evaluate_bound_gap, prune_mask,
    train, DenseNet, Objective, PruneExperimentResult, PruneMode, Quadratic, TrainConfig,
};
use emp_core::{emp_decide, ScoreVector};

const BETAS: [f64; 6] = [0.5, 0.75, 1.0, 1.25, 1.5, 2.0];

fn trained_blob_net(seed: u64) -> (DenseNet, emp_core::net::Dataset) {
    let data = blobs(100, 2, 2, 1.0, seed).unwrap();
    let net = DenseNet::new(&[2, 16, 2], seed).unwrap();
    let cfg = TrainConfig {
        epochs: 200,
        seed,
        ..TrainConfig::default()
    };
    (train(&net, &data, &cfg).unwrap().net, data)
}

#[test]
fn blob_classifier_trains_and_prunes_gently() {
    let (net, data) = trained_blob_net(7);
    assert!(net.accuracy(&data, data.test()).unwrap() >= 0.95);
    for mode in [PruneMode::Global, PruneMode::Block] {
        let rows = beta_sweep(&net, &data, &[1.0], &[mode], None).unwrap();
        assert!(rows[0].epsilon <= 0.15, "{mode}: eps {}", rows[0].epsilon);
    }
}

#[test]
fn sweep_invariants() {
    let (net, data) = trained_blob_net(7);
    let trace = estimate_trace_h(&net, &data, 32, 1).unwrap().mean;
    let rows = beta_sweep(&net, &data, &[0.5, 1.0, 1.0, 2.0, 50.0], &[PruneMode::Global, PruneMode::Block], Some(trace))
        .unwrap();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[2], rows[4]);
    assert_eq!(rows[3], rows[5]);
    for r in &rows {
        assert_eq!(r.sparsity, 1.0 - r.keep_count as f64 / r.n as f64);
        assert!(r.epsilon >= 0.0 && (0.0..1.0).contains(&r.sparsity));
        let mask = prune_mask(&net, r.mode, r.beta).unwrap();
        let pruned = apply_mask(&net, &mask).unwrap();
        let direct = delta_theta_sq(&net, &pruned).unwrap();
        assert!((direct - dropped_weight_sq(&net, &mask)).abs() <= 1e-12);
        assert_eq!(direct, r.delta_theta_sq);
        if r.keep_count == r.n {
            assert_eq!(r.epsilon, 0.0);
        }
    }
    let last = &rows[8..];
    assert!(last.iter().all(|r| r.sparsity == 0.0 && r.epsilon == 0.0));
}

#[test]
fn block_mode_uses_layer_groups() {
    let (net, _) = trained_blob_net(1);
    let scores = emp_core::net::magnitude_scores(&net);
    let mask = prune_mask(&net, PruneMode::Block, 1.0).unwrap();
    let mut at = 0;
    for g in scores.layers.groups() {
        let sub = ScoreVector::new(g.iter().map(|&i| scores.scores.values()[i]).collect()).unwrap();
        let d = emp_decide(&sub, 1.0).unwrap();
        assert_eq!(&mask[at..at + g.len()], d.mask.as_slice());
        at += g.len();
    }
}

fn quadratic_result(q: &Quadratic, theta_star: &[f64], beta: f64) -> (PruneExperimentResult, f64) {
    let s = ScoreVector::new(theta_star.iter().map(|t| t.abs()).collect()).unwrap();
    let d = emp_decide(&s, beta).unwrap();
    let pruned: Vec<f64> = theta_star.iter().zip(&d.mask).map(|(&t, &k)| if k { t } else { 0.0 }).collect();
    let dense_loss = q.loss(theta_star).unwrap();
    let pruned_loss = q.loss(&pruned).unwrap();
    let n = theta_star.len();
    let result = PruneExperimentResult {
        beta,
        mode: PruneMode::Global,
        n,
        keep_count: d.keep_count,
        rho: d.keep_count as f64 / n as f64,
        sparsity: d.sparsity(),
        dense_loss,
        pruned_loss,
        epsilon: (dense_loss - pruned_loss).abs(),
        dense_acc: 1.0,
        pruned_acc: 1.0,
        theta_l1: s.l1_norm(),
        delta_theta_sq: theta_star.iter().zip(&pruned).map(|(a, b)| (a - b) * (a - b)).sum(),
        trace_h_estimate: Some(q.trace()),
        lemma_bound: None,
        asymptotic_bound: None,
    };
    (result, q.trace())
}

/// Loss `0.5 (theta - theta*)^T A (theta - theta*)`: the second-order
/// expansion around the optimum is exact.
#[test]
fn rigged_quadratic_respects_lemma_bound() {
    let n = 60;
    let theta_star: Vec<f64> = (1..=n).map(|i| (if i % 2 == 0 { 1.0 } else { -1.0 }) / (i as f64).powf(1.5)).collect();
    let isotropic = Quadratic::diagonal(&vec![2.0; n], theta_star.clone()).unwrap();
    let graded: Vec<f64> = (0..n).map(|i| 0.5 + (i % 7) as f64 * 0.25).collect();
    let anisotropic = Quadratic::diagonal(&graded, theta_star.clone()).unwrap();
    for q in [&isotropic, &anisotropic] {
        for beta in BETAS {
            let (r, trace) = quadratic_result(q, &theta_star, beta);
            assert!(r.rho <= 0.5, "rho {}", r.rho);
            assert_eq!(r.dense_loss, 0.0);
            let gap = evaluate_bound_gap(&r, trace, 1.0).unwrap();
            assert!(r.epsilon > 0.0);
            assert!(r.epsilon <= gap.lemma_bound, "beta {beta}: {} > {}", r.epsilon, gap.lemma_bound);
            assert!(!gap.exceeds);
        }
    }
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn close(a: &serde_json::Value, b: &serde_json::Value, path: &str) {
    use serde_json::Value;
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs())), "{path}: {x} vs {y}");
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{path}");
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                close(p, q, &format!("{path}[{i}]"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>(), "{path}");
            for (k, v) in x {
                close(v, &y[k], &format!("{path}.{k}"));
            }
        }
        _ => assert_eq!(a, b, "{path}"),
    }
}

/// Set `EMP_BLESS=1` to rewrite the golden file.
#[test]
fn tiny_net_sweep_matches_golden() {
    let (net, data) = trained_blob_net(7);
    let trace = estimate_trace_h(&net, &data, 64, 7).unwrap().mean;
    let rows = beta_sweep(&net, &data, &BETAS, &[PruneMode::Global, PruneMode::Block], Some(trace)).unwrap();
    let got = serde_json::to_value(&rows).unwrap();
    let path = golden_path("blobs_seed7_sweep.json");
    if std::env::var_os("EMP_BLESS").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(&got).unwrap() + "\n").unwrap();
    }
    let want: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    close(&got, &want, "sweep");
}
