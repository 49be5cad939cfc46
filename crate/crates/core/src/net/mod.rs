//! Tiny fully connected networks for magnitude-pruning experiments.

pub mod checkpoint;
mod data;
mod dense;
mod experiment;
mod hessian;
mod train;

pub use data::{blobs, digits, load_idx, two_moons, Dataset, TEST_FRACTION};
pub use dense::{DenseLayer, DenseNet, Gradient};
pub use experiment::{
    apply_mask, beta_sweep, delta_theta_sq, dropped_weight_sq, evaluate_bound_gap, magnitude_scores, prune_mask,
    run_experiment, BoundGapReport, MagnitudeScores, PruneExperimentResult, PruneMode, WeightIndex,
};
pub use hessian::{
    estimate_trace_h, fd_step, hessian_vector_product, hutchinson_trace, NetObjective, Objective, Quadratic,
    TraceEstimate, MIN_PROBES,
};
pub use train::{train, TrainConfig, TrainOutcome};
