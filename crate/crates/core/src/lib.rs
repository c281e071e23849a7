//! Graph-guided elimination of key channels.
//!
//! Pruning a set `S` of key channels perturbs the pre-softmax score matrix by
//! `Σ_{i∈S} q_i k_iᵀ`. Its squared Frobenius norm is the quadratic set function
//! `1_Sᵀ W 1_S` over the channel interaction matrix `W_ij = (q_iᵀq_j)(k_iᵀk_j)`,
//! so choosing what to prune is a minimum-weight induced subgraph problem.
//! This crate builds `W`, selects channels with an incremental-error greedy and
//! several baselines, protects high-norm key channels, and measures the result.

pub mod cli;
pub mod error;
pub mod graph;
pub mod matrix;
pub mod prune;
pub mod recon;
pub mod sim;
pub mod subsets;

pub use error::{Error, Result};
pub use graph::{build_interaction_graph, quadratic_form, EigenCertificate, InteractionGraph};
pub use matrix::{column_dot, ChannelMatrix, IndexSet};
pub use prune::{ProtectionPolicy, PruneSelection, Selector};
pub use recon::{decomposed_error_sq, reconstruction_error_sq, relative_error};
