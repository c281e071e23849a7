use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::oracle::incremental_trace;
use super::{budget, candidates, Chosen, PruneSelection, Selector};
use crate::error::Result;
use crate::graph::{build_interaction_graph, InteractionGraph};
use crate::matrix::{ChannelMatrix, IndexSet};

pub(crate) fn run(g: &InteractionGraph, lambda: f64, protected: &IndexSet, seed: u64) -> Result<Chosen> {
    let pool = candidates(g.dim(), protected)?;
    let budget = budget(lambda, g.dim(), protected.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pruned: Vec<usize> = pool.choose_multiple(&mut rng, budget.n_prune).copied().collect();
    Ok(Chosen {
        budget,
        trace: incremental_trace(g, &pruned),
        pruned,
    })
}

/// Uniformly random unprotected channels; the same seed always yields the same set.
pub fn random_select(
    q: &ChannelMatrix,
    k: &ChannelMatrix,
    lambda: f64,
    protected: &IndexSet,
    seed: u64,
) -> Result<PruneSelection> {
    let g = build_interaction_graph(q, k)?;
    random_select_graph(&g, q, k, lambda, protected, seed)
}

pub fn random_select_graph(
    g: &InteractionGraph,
    q: &ChannelMatrix,
    k: &ChannelMatrix,
    lambda: f64,
    protected: &IndexSet,
    seed: u64,
) -> Result<PruneSelection> {
    run(g, lambda, protected, seed)?.finish(Selector::Random, lambda, protected, q, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(d: usize) -> (ChannelMatrix, ChannelMatrix) {
        let m = ChannelMatrix::new(2, d, (0..2 * d).map(|i| 1.0 + i as f64).collect()).unwrap();
        (m.clone(), m)
    }

    #[test]
    fn zero_ratio() {
        let (q, k) = ones(5);
        assert!(random_select(&q, &k, 0.0, &IndexSet::empty(), 3)
            .unwrap()
            .pruned
            .is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let (q, k) = ones(12);
        let a = random_select(&q, &k, 0.5, &IndexSet::empty(), 42).unwrap();
        let b = random_select(&q, &k, 0.5, &IndexSet::empty(), 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_over_unprotected() {
        let d = 10;
        let (q, k) = ones(d);
        let protected = IndexSet::new(vec![2, 7], d).unwrap();
        let mut counts = vec![0usize; d];
        let seeds = 1000;
        for seed in 0..seeds {
            let sel = random_select(&q, &k, 0.4, &protected, seed).unwrap();
            assert_eq!(sel.n_prune, 4);
            for &j in sel.pruned.as_slice() {
                counts[j] += 1;
            }
        }
        let expected = 4.0 / 8.0;
        for (j, &c) in counts.iter().enumerate() {
            if protected.contains(j) {
                assert_eq!(c, 0);
            } else {
                let freq = c as f64 / seeds as f64;
                assert!((freq - expected).abs() <= 0.05, "channel {j}: {freq}");
            }
        }
    }
}
