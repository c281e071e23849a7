//! Channel selection: which key channels to drop at a given pruning ratio.
//!
//! Every selector works on the candidate pool `{0..d} \ protected` and prunes
//! `n_prune = ⌈λd⌉` channels, clamped to the pool size when protection leaves
//! too few candidates. Ties always go to the lowest channel index.

mod mies;
mod oracle;
mod protect;
mod random;
mod think;

pub use mies::{mies_select, mies_select_graph, Mies};
pub use oracle::{oracle_select, oracle_select_graph, oracle_select_with_cap};
pub use protect::{clamp_fraction, protect_by_norms, protect_channels, ProtectionPolicy, ProtectionReport};
pub use random::{random_select, random_select_graph};
pub use think::{think_scores, think_select};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{ChannelMatrix, IndexSet};
use crate::recon::reconstruction_error_sq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Selector {
    Mies,
    Think,
    Random,
    Oracle,
}

impl Selector {
    pub const ALL: [Selector; 4] = [Selector::Mies, Selector::Think, Selector::Random, Selector::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Selector::Mies => "MIES",
            Selector::Think => "THINK",
            Selector::Random => "RANDOM",
            Selector::Oracle => "ORACLE",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Selector::ALL
            .into_iter()
            .find(|sel| sel.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown selector `{s}`")))
    }
}

/// One greedy step: the channel chosen and the score it was chosen with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreStep {
    pub index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneSelection {
    pub selector: Selector,
    pub lambda: f64,
    /// `⌈λd⌉` before clamping to the candidate pool.
    pub requested: usize,
    pub n_prune: usize,
    /// Set when protection left fewer than `requested` candidates.
    pub clamped: bool,
    pub protected: IndexSet,
    /// Pruned channels in the order they were chosen.
    pub pruned: IndexSet,
    /// THINK records its own score. MIES, RANDOM and ORACLE record the increase
    /// `f(P ∪ {j}) − f(P)` each channel contributed when it was added.
    pub score_trace: Vec<ScoreStep>,
    /// `‖Q Kᵀ − Q S Kᵀ‖²_F` for the pruned set, computed directly.
    pub error_sq: f64,
}

/// `⌈frac·n⌉`, treating products within `1e-9` of an integer as that integer so
/// that e.g. `0.6·10` prunes 6 channels rather than 7.
pub fn ceil_count(frac: f64, n: usize) -> usize {
    let x = frac * n as f64;
    let r = x.round();
    let c = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) { r } else { x.ceil() };
    (c.max(0.0) as usize).min(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Budget {
    pub requested: usize,
    pub n_prune: usize,
    pub clamped: bool,
}

pub(crate) fn budget(lambda: f64, d: usize, n_protected: usize) -> Result<Budget> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::arg(format!("pruning ratio {lambda} outside [0, 1]")));
    }
    let requested = ceil_count(lambda, d);
    let pool = d - n_protected;
    Ok(Budget {
        requested,
        n_prune: requested.min(pool),
        clamped: requested > pool,
    })
}

/// Unprotected channel indices in ascending order.
pub(crate) fn candidates(d: usize, protected: &IndexSet) -> Result<Vec<usize>> {
    protected.check_width(d)?;
    let mask = protected.mask(d);
    Ok((0..d).filter(|&j| !mask[j]).collect())
}

/// Selection result before the error is evaluated against the source matrices.
pub(crate) struct Chosen {
    pub budget: Budget,
    pub pruned: Vec<usize>,
    pub trace: Vec<ScoreStep>,
}

impl Chosen {
    pub fn finish(
        self,
        selector: Selector,
        lambda: f64,
        protected: &IndexSet,
        q: &ChannelMatrix,
        k: &ChannelMatrix,
    ) -> Result<PruneSelection> {
        let pruned = IndexSet::new(self.pruned, q.cols())?;
        let error_sq = reconstruction_error_sq(q, k, &pruned)?;
        Ok(PruneSelection {
            selector,
            lambda,
            requested: self.budget.requested,
            n_prune: self.budget.n_prune,
            clamped: self.budget.clamped,
            protected: protected.clone(),
            pruned,
            score_trace: self.trace,
            error_sq,
        })
    }
}

/// Computes the protected set under `policy`, then runs `selector`.
///
/// `seed` only matters for [`Selector::Random`].
pub fn select(
    selector: Selector,
    q: &ChannelMatrix,
    k: &ChannelMatrix,
    lambda: f64,
    policy: &ProtectionPolicy,
    seed: u64,
) -> Result<PruneSelection> {
    crate::recon::check_widths(q, k)?;
    let protected = protect_channels(k, policy);
    select_with_protected(selector, q, k, lambda, &protected, seed)
}

pub fn select_with_protected(
    selector: Selector,
    q: &ChannelMatrix,
    k: &ChannelMatrix,
    lambda: f64,
    protected: &IndexSet,
    seed: u64,
) -> Result<PruneSelection> {
    match selector {
        Selector::Mies => mies_select(q, k, lambda, protected),
        Selector::Think => think_select(q, k, lambda, protected),
        Selector::Random => random_select(q, k, lambda, protected, seed),
        Selector::Oracle => oracle_select(q, k, lambda, protected),
    }
}
