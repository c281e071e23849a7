//! Attention reconstruction error of a pruned channel set.
//!
//! Two routes to the same quantity are provided. [`reconstruction_error_sq`]
//! materializes the difference of the pre-softmax score matrices entry by entry,
//! while [`decomposed_error_sq`] sums node and edge weights of the interaction
//! graph over the pruned set. They must agree to within `1e-9` relative.

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::matrix::{ChannelMatrix, IndexSet};

pub(crate) fn check_widths(q: &ChannelMatrix, k: &ChannelMatrix) -> Result<()> {
    if q.cols() != k.cols() {
        return Err(Error::arg(format!(
            "query width {} does not match key width {}",
            q.cols(),
            k.cols()
        )));
    }
    Ok(())
}

/// `‖Q Kᵀ − Q S Kᵀ‖²_F` where `S` zeroes the channels in `pruned`.
///
/// Entry `(r, s)` of the difference is `Σ_{j∈pruned} Q[r,j]·K[s,j]`, so only the
/// pruned channels are touched.
pub fn reconstruction_error_sq(
    q: &ChannelMatrix,
    k: &ChannelMatrix,
    pruned: &IndexSet,
) -> Result<f64> {
    check_widths(q, k)?;
    pruned.check_width(q.cols())?;
    let idx = pruned.sorted();
    if idx.is_empty() {
        return Ok(0.0);
    }
    let k_cols: Vec<Vec<f64>> = (0..k.rows())
        .map(|s| idx.iter().map(|&j| k.get(s, j)).collect())
        .collect();
    let mut total = 0.0;
    for r in 0..q.rows() {
        let q_row: Vec<f64> = idx.iter().map(|&j| q.get(r, j)).collect();
        for k_row in &k_cols {
            let diff: f64 = q_row.iter().zip(k_row).map(|(a, b)| a * b).sum();
            total += diff * diff;
        }
    }
    Ok(total)
}

/// `‖Q Kᵀ‖²_F`, the error of pruning every channel.
pub fn attention_norm_sq(q: &ChannelMatrix, k: &ChannelMatrix) -> Result<f64> {
    reconstruction_error_sq(q, k, &IndexSet::full(q.cols()))
}

/// `‖Q Kᵀ − Q S Kᵀ‖_F / ‖Q Kᵀ‖_F`.
pub fn relative_error(q: &ChannelMatrix, k: &ChannelMatrix, pruned: &IndexSet) -> Result<f64> {
    let denom = attention_norm_sq(q, k)?;
    if denom == 0.0 {
        return Err(Error::Degenerate("attention product Q·Kᵀ is all zero".into()));
    }
    Ok((reconstruction_error_sq(q, k, pruned)? / denom).sqrt())
}

/// Sum of self-importance over the pruned set plus every ordered cross-channel
/// interaction `W_ij`, `i ≠ j`, within it.
pub fn decomposed_error_sq(g: &InteractionGraph, pruned: &IndexSet) -> Result<f64> {
    pruned.check_width(g.dim())?;
    let idx = pruned.as_slice();
    let self_importance: f64 = idx.iter().map(|&i| g.node_weight(i)).sum();
    let mut interaction = 0.0;
    for &i in idx {
        for &j in idx {
            if i != j {
                interaction += g.weight(i, j);
            }
        }
    }
    Ok(self_importance + interaction)
}
