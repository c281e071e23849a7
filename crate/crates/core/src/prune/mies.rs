//! Minimum incremental error selection.
//!
//! Each candidate `c` carries a score `s_c = W_cc + Σ_{j∈P} 2·W_cj`, which is
//! exactly the increase `f(P ∪ {c}) − f(P)` of the pruning error if `c` were
//! pruned next. Scores start at the node weights and, after `j*` is pruned,
//! every remaining score gains the edge weight `2·W_{c,j*}`. The running error
//! `f(P)` is the sum of the scores of the chosen channels, so the cumulative
//! error of each candidate, `f(P) + s_c`, is available without re-summing.

use super::{budget, candidates, Chosen, PruneSelection, ScoreStep, Selector};
use crate::error::Result;
use crate::graph::{build_interaction_graph, InteractionGraph};
use crate::matrix::{ChannelMatrix, IndexSet};

/// Greedy state over a fixed interaction graph.
pub struct Mies<'g> {
    graph: &'g InteractionGraph,
    scores: Vec<f64>,
    candidate: Vec<bool>,
    pruned: Vec<usize>,
    pruned_error: f64,
}

impl<'g> Mies<'g> {
    /// Starts with every unprotected channel as a candidate and `s_j = W_jj`.
    pub fn new(graph: &'g InteractionGraph, protected: &IndexSet) -> Result<Self> {
        let d = graph.dim();
        let pool = candidates(d, protected)?;
        let mut candidate = vec![false; d];
        for &j in &pool {
            candidate[j] = true;
        }
        let scores = (0..d).map(|j| graph.node_weight(j)).collect();
        Ok(Self {
            graph,
            scores,
            candidate,
            pruned: Vec::new(),
            pruned_error: 0.0,
        })
    }

    pub fn pruned(&self) -> &[usize] {
        &self.pruned
    }

    /// `f(P)` accumulated from the scores of the channels pruned so far.
    pub fn pruned_error(&self) -> f64 {
        self.pruned_error
    }

    /// Remaining candidates with their incremental scores, ascending by index.
    pub fn candidate_scores(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.scores.len())
            .filter(|&j| self.candidate[j])
            .map(|j| (j, self.scores[j]))
    }

    /// Remaining candidates with the cumulative error `f(P) + s_c` of pruning them next.
    pub fn cumulative_scores(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.candidate_scores().map(|(j, s)| (j, self.pruned_error + s))
    }

    /// Prunes the minimum-score candidate (lowest index on ties) and folds its
    /// interactions into the remaining scores. `None` once no candidates remain.
    pub fn step(&mut self) -> Option<ScoreStep> {
        let mut best: Option<(usize, f64)> = None;
        for (j, s) in self.candidate_scores() {
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((j, s));
            }
        }
        let (chosen, score) = best?;
        self.candidate[chosen] = false;
        self.pruned.push(chosen);
        self.pruned_error += score;
        for c in 0..self.scores.len() {
            if self.candidate[c] {
                self.scores[c] += self.graph.edge_weight(c, chosen);
            }
        }
        Some(ScoreStep {
            index: chosen,
            score,
        })
    }
}

pub(crate) fn run(g: &InteractionGraph, lambda: f64, protected: &IndexSet) -> Result<Chosen> {
    let budget = budget(lambda, g.dim(), protected.len())?;
    let mut state = Mies::new(g, protected)?;
    let trace: Vec<ScoreStep> = (0..budget.n_prune).map_while(|_| state.step()).collect();
    Ok(Chosen {
        budget,
        pruned: state.pruned,
        trace,
    })
}

pub fn mies_select(
    q: &ChannelMatrix,
    k: &ChannelMatrix,
    lambda: f64,
    protected: &IndexSet,
) -> Result<PruneSelection> {
    let g = build_interaction_graph(q, k)?;
    mies_select_graph(&g, q, k, lambda, protected)
}

/// As [`mies_select`] with a prebuilt graph for `(q, k)`.
pub fn mies_select_graph(
    g: &InteractionGraph,
    q: &ChannelMatrix,
    k: &ChannelMatrix,
    lambda: f64,
    protected: &IndexSet,
) -> Result<PruneSelection> {
    run(g, lambda, protected)?.finish(Selector::Mies, lambda, protected, q, k)
}
