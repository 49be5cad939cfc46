//! Independent EMP decisions over disjoint groups of a score vector
//! (per layer, per image tile, per row).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rule::{check_beta, emp_decide, EmpDecision, ScoreVector};

/// Disjoint, non-empty index groups covering `0..n` exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<usize>>")]
pub struct Partition {
    groups: Vec<Vec<usize>>,
    n: usize,
}

impl Partition {
    pub fn new(groups: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for (g, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::InvalidPartition(format!("group {g} is empty")));
            }
            for &i in group {
                match seen.get_mut(i) {
                    None => {
                        return Err(Error::InvalidPartition(format!(
                            "group {g} has index {i} outside 0..{n}"
                        )))
                    }
                    Some(true) => {
                        return Err(Error::InvalidPartition(format!(
                            "index {i} appears in more than one group"
                        )))
                    }
                    Some(slot) => *slot = true,
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("index {missing} is not covered")));
        }
        Ok(Self { groups, n })
    }

    /// Builds a partition from groups alone; `n` is inferred as the number of
    /// indices listed.
    pub fn from_groups(groups: Vec<Vec<usize>>) -> Result<Self> {
        let n = groups.iter().map(Vec::len).sum();
        Self::new(groups, n)
    }

    pub fn single(n: usize) -> Self {
        Self {
            groups: vec![(0..n).collect()],
            n,
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            groups: (0..n).map(|i| vec![i]).collect(),
            n,
        }
    }

    /// Consecutive blocks of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let groups = sizes
            .iter()
            .map(|&len| {
                let g: Vec<usize> = (start..start + len).collect();
                start += len;
                g
            })
            .collect();
        Self::new(groups, start)
    }

    /// Row-major `width x height` grid cut into `patch x patch` tiles.
    /// Edge tiles are smaller when the size is not a multiple of `patch`.
    pub fn tiles(width: usize, height: usize, patch: usize) -> Result<Self> {
        if patch == 0 {
            return Err(Error::InvalidPartition("patch edge must be at least 1".into()));
        }
        let mut groups = Vec::with_capacity(width.div_ceil(patch) * height.div_ceil(patch));
        for ty in (0..height).step_by(patch) {
            for tx in (0..width).step_by(patch) {
                let mut g = Vec::with_capacity(patch * patch);
                for y in ty..(ty + patch).min(height) {
                    for x in tx..(tx + patch).min(width) {
                        g.push(y * width + x);
                    }
                }
                groups.push(g);
            }
        }
        Self::new(groups, width * height)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

impl From<Partition> for Vec<Vec<usize>> {
    fn from(p: Partition) -> Self {
        p.groups
    }
}

/// Per-group decisions; each decision's indices are local to its group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionedDecision {
    pub n: usize,
    pub groups: Vec<Vec<usize>>,
    pub decisions: Vec<EmpDecision>,
}

impl PartitionedDecision {
    pub fn keep_count(&self) -> usize {
        self.decisions.iter().map(|d| d.keep_count).sum()
    }

    /// `1 - sum(keep_count) / n`.
    pub fn sparsity(&self) -> f64 {
        1.0 - self.keep_count() as f64 / self.n as f64
    }

    /// Mask over the original index space.
    pub fn global_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for (group, d) in self.groups.iter().zip(&self.decisions) {
            for &local in &d.kept_indices {
                mask[group[local]] = true;
            }
        }
        mask
    }

    /// Kept positions in the original index space, ascending.
    pub fn global_kept_indices(&self) -> Vec<usize> {
        let mut kept: Vec<usize> = self
            .groups
            .iter()
            .zip(&self.decisions)
            .flat_map(|(group, d)| d.kept_indices.iter().map(move |&l| group[l]))
            .collect();
        kept.sort_unstable();
        kept
    }
}

/// Applies [`emp_decide`] independently to each group of `p`. Groups are
/// evaluated in parallel and merged in group order.
pub fn emp_decide_partitioned(
    s: &ScoreVector,
    p: &Partition,
    beta: f64,
) -> Result<PartitionedDecision> {
    check_beta(beta)?;
    if s.len() != p.n() {
        return Err(Error::LengthMismatch {
            expected: p.n(),
            actual: s.len(),
        });
    }
    let decisions = p
        .groups()
        .par_iter()
        .enumerate()
        .map(|(g, group)| {
            let sub = s.restrict(group)?;
            emp_decide(&sub, beta).map_err(|e| match e {
                Error::ZeroScoreVector { .. } => Error::ZeroScoreVector { group: Some(g) },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PartitionedDecision {
        n: p.n(),
        groups: p.groups().to_vec(),
        decisions,
    })
}
