//! The channel interaction graph.
//!
//! Vertices are channels. The matrix `W` stores `W_ij = (q_iᵀq_j)·(k_iᵀk_j)`
//! unhalved: the diagonal is each channel's self-importance `‖q_i k_iᵀ‖²_F`, and
//! an undirected edge weight is `2·W_ij`, which falls out of summing both
//! `(i, j)` and `(j, i)`. With that convention the pruning error of a set `S` is
//! literally `1_Sᵀ W 1_S`.

mod eigen;

pub use eigen::{
    min_eigenvalue, restricted_eigenvalues, restricted_eigenvalues_sampled,
    restricted_eigenvalues_with_cap, symmetric_eigenvalues, EigenCertificate,
};

use crate::error::{Error, Result};
use crate::matrix::{ChannelMatrix, IndexSet};
use crate::recon::check_widths;

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    dim: usize,
    weights: Vec<f64>,
}

impl InteractionGraph {
    /// Wraps an explicit `dim × dim` row-major weight matrix.
    ///
    /// Only shape and finiteness are checked; symmetry is not enforced so that
    /// externally supplied (or deliberately corrupted) matrices can be inspected
    /// with [`InteractionGraph::is_symmetric`].
    pub fn from_weights(dim: usize, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || weights.len() != dim * dim {
            return Err(Error::arg(format!(
                "expected {dim}x{dim} weights, got {} values",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::arg("interaction weights must be finite"));
        }
        Ok(Self { dim, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.dim + j]
    }

    /// `w_i = W_ii = ‖q_i k_iᵀ‖²_F`.
    pub fn node_weight(&self, i: usize) -> f64 {
        self.weight(i, i)
    }

    /// `w_ij = 2·W_ij`, the weight of the undirected edge between two distinct channels.
    pub fn edge_weight(&self, i: usize, j: usize) -> f64 {
        2.0 * self.weight(i, j)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.weight(i, j) == self.weight(j, i)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Principal submatrix on `support`, row-major.
    pub fn principal_submatrix(&self, support: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(support.len() * support.len());
        for &i in support {
            out.extend(support.iter().map(|&j| self.weight(i, j)));
        }
        out
    }

    /// Returns a copy with channels reordered so that new channel `j` is old channel `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        IndexSet::new(perm.to_vec(), self.dim)?;
        if perm.len() != self.dim {
            return Err(Error::arg("permutation length does not match dimension"));
        }
        let weights = perm
            .iter()
            .flat_map(|&i| perm.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.weight(i, j))
            .collect();
        Ok(Self {
            dim: self.dim,
            weights,
        })
    }
}

/// Builds `W = (QᵀQ) ∘ (KᵀK)` from the two Gram matrices.
///
/// Runs in `O(d²·(L + L_obs))`. Both Grams are mirrored, so `W` is exactly symmetric.
pub fn build_interaction_graph(q: &ChannelMatrix, k: &ChannelMatrix) -> Result<InteractionGraph> {
    check_widths(q, k)?;
    let gq = q.gram();
    let gk = k.gram();
    let weights = gq.iter().zip(&gk).map(|(a, b)| a * b).collect();
    Ok(InteractionGraph {
        dim: q.cols(),
        weights,
    })
}

/// `f(S) = 1_Sᵀ W 1_S = Σ_{i,j∈S} W_ij`.
///
/// Indices are summed in ascending order so the value depends only on the set,
/// not on the order it was built in.
pub fn quadratic_form(g: &InteractionGraph, s: &IndexSet) -> Result<f64> {
    s.check_width(g.dim())?;
    Ok(quadratic_form_sorted(g, &s.sorted()))
}

/// [`quadratic_form`] on an already sorted, validated support.
pub(crate) fn quadratic_form_sorted(g: &InteractionGraph, sorted: &[usize]) -> f64 {
    let mut total = 0.0;
    for &i in sorted {
        for &j in sorted {
            total += g.weight(i, j);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::column_dot;
    use crate::recon::decomposed_error_sq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ChannelMatrix {
        let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
        ChannelMatrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn orthogonal_queries_kill_interaction() {
        let q = ChannelMatrix::from_columns(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let k = ChannelMatrix::from_columns(&[[3.0, -1.0], [5.0, 7.0]]).unwrap();
        let g = build_interaction_graph(&q, &k).unwrap();
        assert_eq!(g.weight(0, 1), 0.0);
        assert_eq!(g.weight(1, 0), 0.0);
    }

    #[test]
    fn two_channel_weights() {
        let q = ChannelMatrix::from_columns(&[[1.0, 1.0], [1.0, 0.0]]).unwrap();
        let k = ChannelMatrix::from_columns(&[[1.0, 0.0], [1.0, 1.0]]).unwrap();
        let g = build_interaction_graph(&q, &k).unwrap();
        // naive-loop oracle
        for i in 0..2 {
            for j in 0..2 {
                let want = column_dot(&q, i, j).unwrap() * column_dot(&k, i, j).unwrap();
                assert_eq!(g.weight(i, j), want);
            }
        }
        assert_eq!(g.weights(), &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(g.edge_weight(0, 1), 2.0);
    }

    #[test]
    fn diagonal_is_norm_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let q = random_matrix(&mut rng, 7, 5);
            let k = random_matrix(&mut rng, 9, 5);
            let g = build_interaction_graph(&q, &k).unwrap();
            let qn = q.column_norms();
            let kn = k.column_norms();
            for i in 0..5 {
                let want = qn[i].powi(2) * kn[i].powi(2);
                assert!((g.node_weight(i) - want).abs() <= 1e-12 * want.max(1.0));
                assert!(g.node_weight(i) >= 0.0);
            }
            assert!(g.is_symmetric());
        }
    }

    #[test]
    fn quadratic_form_examples() {
        let g = InteractionGraph::from_weights(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(quadratic_form(&g, &IndexSet::empty()).unwrap(), 0.0);
        assert_eq!(quadratic_form(&g, &IndexSet::full(2)).unwrap(), 6.0);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = build_interaction_graph(&random_matrix(&mut rng, 4, 6), &random_matrix(&mut rng, 5, 6))
            .unwrap();
        let total: f64 = g.weights().iter().sum();
        let full = quadratic_form(&g, &IndexSet::full(6)).unwrap();
        assert!((full - total).abs() <= 1e-12 * total.abs().max(1.0));
    }

    #[test]
    fn quadratic_form_matches_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = build_interaction_graph(&random_matrix(&mut rng, 6, 9), &random_matrix(&mut rng, 8, 9))
            .unwrap();
        let s = IndexSet::new(vec![8, 2, 5, 0], 9).unwrap();
        let a = quadratic_form(&g, &s).unwrap();
        let b = decomposed_error_sq(&g, &s).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn permutation_conjugates_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let q = random_matrix(&mut rng, 6, 5);
        let k = random_matrix(&mut rng, 6, 5);
        let perm = [3, 0, 4, 1, 2];
        let g = build_interaction_graph(&q, &k).unwrap();
        let gp = build_interaction_graph(
            &q.permute_columns(&perm).unwrap(),
            &k.permute_columns(&perm).unwrap(),
        )
        .unwrap();
        assert_eq!(gp, g.permuted(&perm).unwrap());
    }

    #[test]
    fn width_mismatch() {
        let q = ChannelMatrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        let k = ChannelMatrix::new(1, 1, vec![1.0]).unwrap();
        assert!(build_interaction_graph(&q, &k).is_err());
    }
}
