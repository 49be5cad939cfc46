//! Effective model pruning.
//!
//! Turns any score vector into a keep-count via the inverse Simpson index of
//! its normalized magnitudes, and provides the surrounding toolkit: closed-form
//! bounds on the retained mass and on the loss change, a geometric oracle for
//! those bounds, featurewise pruning of RGB images, and a small dense-network
//! rig for magnitude pruning experiments.

pub mod bounds;
pub mod error;
pub mod image;
pub mod io;
pub mod net;
pub mod partition;
pub mod rule;
pub mod simplex;

pub use error::{Error, Result};
pub use partition::{emp_decide_partitioned, Partition, PartitionedDecision};
pub use rule::{
    combine_min, effective_number, emp_decide, keep_count, normalize, retained_mass, EmpDecision, ScoreVector,
    SimplexPoint,
};
