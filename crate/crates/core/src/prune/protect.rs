//! Salient-channel protection.
//!
//! Key channels whose L2 norm exceeds `mean + σ·std` of all channel norms are
//! shielded from pruning. The raw fraction of such channels is clamped to
//! `[a, b]` and the `⌈p_protect·d⌉` largest-norm channels are protected.

use super::ceil_count;
use crate::error::{Error, Result};
use crate::matrix::{ChannelMatrix, IndexSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtectionPolicy {
    threshold_sigma: f64,
    lower: f64,
    upper: f64,
    enabled: bool,
}

impl Default for ProtectionPolicy {
    /// One standard deviation, clamp bounds `[0.01, 0.125]`, enabled.
    fn default() -> Self {
        Self {
            threshold_sigma: 1.0,
            lower: 0.01,
            upper: 0.125,
            enabled: true,
        }
    }
}

impl ProtectionPolicy {
    pub fn new(threshold_sigma: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(threshold_sigma >= 0.0 && threshold_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "protection threshold multiplier must be finite and >= 0, got {threshold_sigma}"
            )));
        }
        if !(0.0 <= lower && lower <= upper && upper <= 1.0) {
            return Err(Error::Config(format!(
                "protection bounds must satisfy 0 <= a <= b <= 1, got [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            threshold_sigma,
            lower,
            upper,
            enabled: true,
        })
    }

    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn with_enabled(self, enabled: bool) -> Self {
        Self { enabled, ..self }
    }

    pub fn threshold_sigma(&self) -> f64 {
        self.threshold_sigma
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }
}

/// Statistics behind one protection decision.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtectionReport {
    pub mean: f64,
    /// Population standard deviation (divisor `d`).
    pub std: f64,
    pub threshold: f64,
    /// Fraction of channels whose norm strictly exceeds the threshold.
    pub raw_fraction: f64,
    pub clamped_fraction: f64,
    /// Largest-norm channels first.
    pub protected: IndexSet,
}

/// `p_protect = min(max(p, a), b)`.
pub fn clamp_fraction(p: f64, lower: f64, upper: f64) -> f64 {
    p.max(lower).min(upper)
}

/// Protection statistics over precomputed channel norms.
///
/// Returns an empty protected set when the policy is disabled (statistics are
/// still reported).
pub fn protect_by_norms(norms: &[f64], policy: &ProtectionPolicy) -> ProtectionReport {
    let d = norms.len();
    let n = d.max(1) as f64;
    let mean = norms.iter().sum::<f64>() / n;
    let var = norms.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let threshold = mean + policy.threshold_sigma * std;
    let raw_fraction = norms.iter().filter(|&&x| x > threshold).count() as f64 / n;
    let clamped_fraction = clamp_fraction(raw_fraction, policy.lower, policy.upper);

    let protected = if policy.enabled {
        let count = ceil_count(clamped_fraction, d);
        let mut order: Vec<usize> = (0..d).collect();
        // stable: equal norms keep ascending index order
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
        order.truncate(count);
        IndexSet::new(order, d).expect("indices from 0..d are distinct")
    } else {
        IndexSet::empty()
    };
    ProtectionReport {
        mean,
        std,
        threshold,
        raw_fraction,
        clamped_fraction,
        protected,
    }
}

/// Channels of `k` shielded from pruning under `policy`.
pub fn protect_channels(k: &ChannelMatrix, policy: &ProtectionPolicy) -> IndexSet {
    if !policy.enabled {
        return IndexSet::empty();
    }
    protect_by_norms(&k.column_norms(), policy).protected
}
