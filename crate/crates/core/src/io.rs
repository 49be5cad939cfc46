//! Score / partition input formats and the decision wire format.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{Partition, PartitionedDecision};
use crate::rule::{EmpDecision, ScoreVector};

/// Parses scores from CSV text: one value per line, comma-separated rows, or
/// any mix of the two. Blank fields are skipped.
pub fn parse_scores_csv(text: &str) -> Result<ScoreVector> {
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        for field in line.split(',') {
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad number {field:?}", line_no + 1)))?;
            values.push(v);
        }
    }
    ScoreVector::new(values)
}

pub fn parse_scores_json(text: &str) -> Result<ScoreVector> {
    let values: Vec<f64> = serde_json::from_str(text)?;
    ScoreVector::new(values)
}

/// JSON when the first non-blank character is `[`, CSV otherwise.
pub fn parse_scores(text: &str) -> Result<ScoreVector> {
    if text.trim_start().starts_with('[') {
        parse_scores_json(text)
    } else {
        parse_scores_csv(text)
    }
}

/// A JSON list of index arrays, checked against `n` scores.
pub fn parse_partition_json(text: &str, n: usize) -> Result<Partition> {
    let groups: Vec<Vec<usize>> = serde_json::from_str(text)?;
    Partition::new(groups, n)
}

/// Packs booleans MSB-first into bytes and base64-encodes them (standard
/// alphabet, padded). Compatible with `numpy.packbits` / `unpackbits`.
pub fn pack_mask(mask: &[bool]) -> String {
    let mut bytes = vec![0u8; mask.len().div_ceil(8)];
    for (i, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
        bytes[i / 8] |= 0x80 >> (i % 8);
    }
    STANDARD.encode(bytes)
}

pub fn unpack_mask(encoded: &str, n: usize) -> Result<Vec<bool>> {
    let bytes = STANDARD
        .decode(encoded)
        .map_err(|e| Error::Parse(format!("mask is not valid base64: {e}")))?;
    if bytes.len() != n.div_ceil(8) {
        return Err(Error::LengthMismatch {
            expected: n.div_ceil(8),
            actual: bytes.len(),
        });
    }
    Ok((0..n).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect())
}

/// Serialized form of a decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub n: usize,
    pub n_eff: usize,
    pub beta: f64,
    pub keep_count: usize,
    pub s_eff: f64,
    pub sparsity: f64,
    pub kept_indices: Vec<usize>,
    pub mask: String,
}

impl From<&EmpDecision> for DecisionRecord {
    fn from(d: &EmpDecision) -> Self {
        Self {
            n: d.n,
            n_eff: d.n_eff,
            beta: d.beta,
            keep_count: d.keep_count,
            s_eff: d.s_eff,
            sparsity: d.sparsity(),
            kept_indices: d.kept_indices.clone(),
            mask: pack_mask(&d.mask),
        }
    }
}

/// Partitioned decisions: one record per group (local indices), plus the
/// merged mask in the original index space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionedRecord {
    pub n: usize,
    pub beta: f64,
    pub keep_count: usize,
    pub sparsity: f64,
    pub kept_indices: Vec<usize>,
    pub mask: String,
    pub groups: Vec<DecisionRecord>,
}

impl From<&PartitionedDecision> for PartitionedRecord {
    fn from(d: &PartitionedDecision) -> Self {
        Self {
            n: d.n,
            beta: d.decisions.first().map_or(f64::NAN, |x| x.beta),
            keep_count: d.keep_count(),
            sparsity: d.sparsity(),
            kept_indices: d.global_kept_indices(),
            mask: pack_mask(&d.global_mask()),
            groups: d.decisions.iter().map(DecisionRecord::from).collect(),
        }
    }
}
