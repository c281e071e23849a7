use super::{budget, candidates, Chosen, PruneSelection, ScoreStep, Selector};
use crate::error::{Error, Result};
use crate::graph::{build_interaction_graph, quadratic_form_sorted, InteractionGraph};
use crate::matrix::{ChannelMatrix, IndexSet};
use crate::subsets::{binomial, Combinations, DEFAULT_ENUMERATION_CAP};

/// Increase in `f` contributed by each channel of `order`, taken in sequence.
pub(crate) fn incremental_trace(g: &InteractionGraph, order: &[usize]) -> Vec<ScoreStep> {
    let mut trace = Vec::with_capacity(order.len());
    for (t, &j) in order.iter().enumerate() {
        let cross: f64 = order[..t].iter().map(|&i| g.edge_weight(j, i)).sum();
        trace.push(ScoreStep {
            index: j,
            score: g.node_weight(j) + cross,
        });
    }
    trace
}

pub(crate) fn run(g: &InteractionGraph, lambda: f64, protected: &IndexSet, cap: u128) -> Result<Chosen> {
    let pool = candidates(g.dim(), protected)?;
    let budget = budget(lambda, g.dim(), protected.len())?;
    let required = binomial(pool.len(), budget.n_prune);
    if required > cap {
        return Err(Error::Capacity { required, cap });
    }
    // Lexicographic enumeration with a strict comparison keeps the smallest
    // index set among exact ties.
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut subsets = Combinations::new(pool, budget.n_prune);
    while let Some(s) = subsets.next_subset() {
        let f = quadratic_form_sorted(g, s);
        if best.as_ref().is_none_or(|(b, _)| f < *b) {
            best = Some((f, s.to_vec()));
        }
    }
    let pruned = best.map(|(_, s)| s).unwrap_or_default();
    Ok(Chosen {
        budget,
        trace: incremental_trace(g, &pruned),
        pruned,
    })
}

/// Exact minimizer of `f(S)` over all feasible pruned sets, capped at 2×10⁶ subsets.
pub fn oracle_select(
    q: &ChannelMatrix,
    k: &ChannelMatrix,
    lambda: f64,
    protected: &IndexSet,
) -> Result<PruneSelection> {
    oracle_select_with_cap(q, k, lambda, protected, DEFAULT_ENUMERATION_CAP)
}

pub fn oracle_select_with_cap(
    q: &ChannelMatrix,
    k: &ChannelMatrix,
    lambda: f64,
    protected: &IndexSet,
    cap: u128,
) -> Result<PruneSelection> {
    let g = build_interaction_graph(q, k)?;
    oracle_select_graph(&g, q, k, lambda, protected, cap)
}

pub fn oracle_select_graph(
    g: &InteractionGraph,
    q: &ChannelMatrix,
    k: &ChannelMatrix,
    lambda: f64,
    protected: &IndexSet,
    cap: u128,
) -> Result<PruneSelection> {
    run(g, lambda, protected, cap)?.finish(Selector::Oracle, lambda, protected, q, k)
}
