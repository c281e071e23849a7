use super::{budget, candidates, Chosen, PruneSelection, ScoreStep, Selector};
use crate::error::Result;
use crate::matrix::{ChannelMatrix, IndexSet};
use crate::recon::check_widths;

/// Independent per-channel score `‖q_j k_jᵀ‖_F = ‖q_j‖·‖k_j‖`.
pub fn think_scores(q: &ChannelMatrix, k: &ChannelMatrix) -> Result<Vec<f64>> {
    check_widths(q, k)?;
    Ok(q.column_norms()
        .into_iter()
        .zip(k.column_norms())
        .map(|(a, b)| a * b)
        .collect())
}

/// Prunes the lowest-scoring unprotected channels, ignoring interactions.
pub fn think_select(
    q: &ChannelMatrix,
    k: &ChannelMatrix,
    lambda: f64,
    protected: &IndexSet,
) -> Result<PruneSelection> {
    let scores = think_scores(q, k)?;
    let mut pool = candidates(q.cols(), protected)?;
    let budget = budget(lambda, q.cols(), protected.len())?;
    // stable sort keeps ascending index order among equal scores
    pool.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let pruned: Vec<usize> = pool.into_iter().take(budget.n_prune).collect();
    let trace = pruned
        .iter()
        .map(|&index| ScoreStep {
            index,
            score: scores[index],
        })
        .collect();
    Chosen {
        budget,
        pruned,
        trace,
    }
    .finish(Selector::Think, lambda, protected, q, k)
}
