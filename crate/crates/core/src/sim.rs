//! Synthetic query/key generators and the decode-time drift evaluator.
//!
//! The generator plants the two phenomena channel pruning depends on: a few
//! key channels carry most of the energy, and query channels with larger mean
//! magnitude also fluctuate more. Future queries are drawn from the same law
//! with a per-channel mean shift, so a pruned set chosen on the observation
//! window can be scored against queries it never saw.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::ChannelMatrix;
use crate::prune::{ceil_count, select, ProtectionPolicy, PruneSelection, Selector};
use crate::recon::{check_widths, relative_error};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Channels `d`.
    pub channels: usize,
    /// Cached key tokens `L`.
    pub key_tokens: usize,
    /// Observation-window query tokens `L_obs`.
    pub obs_tokens: usize,
    /// Held-out future query tokens.
    pub future_tokens: usize,
    pub outlier_fraction: f64,
    pub outlier_scale: f64,
    /// Query noise std and future mean shift, as a multiple of `|m_j|`.
    pub drift_gamma: f64,
    pub scale_log_mean: f64,
    pub scale_log_std: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            channels: 64,
            key_tokens: 64,
            obs_tokens: 16,
            future_tokens: 16,
            outlier_fraction: 0.05,
            outlier_scale: 10.0,
            drift_gamma: 0.5,
            scale_log_mean: 0.0,
            scale_log_std: 0.25,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.channels == 0 || self.key_tokens == 0 || self.obs_tokens == 0 || self.future_tokens == 0 {
            return bad("all token and channel counts must be >= 1".into());
        }
        if self.obs_tokens > self.key_tokens {
            return bad(format!(
                "observation window ({}) longer than key cache ({})",
                self.obs_tokens, self.key_tokens
            ));
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return bad(format!("outlier_fraction {} outside [0, 1]", self.outlier_fraction));
        }
        if !(self.outlier_scale > 0.0 && self.outlier_scale.is_finite()) {
            return bad(format!("outlier_scale must be > 0, got {}", self.outlier_scale));
        }
        if !(self.drift_gamma >= 0.0 && self.drift_gamma.is_finite()) {
            return bad(format!("drift_gamma must be >= 0, got {}", self.drift_gamma));
        }
        if !(self.scale_log_std > 0.0 && self.scale_log_std.is_finite() && self.scale_log_mean.is_finite()) {
            return bad("lognormal scale parameters must be finite with positive spread".into());
        }
        Ok(())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub q_obs: ChannelMatrix,
    pub k: ChannelMatrix,
    pub q_future: ChannelMatrix,
    /// Per-channel scale `c_j`, outlier multiplier included.
    pub scales: Vec<f64>,
    /// Channels whose scale was multiplied by `outlier_scale`, ascending.
    pub planted: Vec<usize>,
}

/// Draws one instance; bit-identical for identical specs.
///
/// * `c_j ~ LogNormal(scale_log_mean, scale_log_std)`, and `⌈outlier_fraction·d⌉`
///   uniformly chosen channels have `c_j` multiplied by `outlier_scale`.
/// * `K[t, j] ~ N(0, c_j²)`.
/// * `m_j = ±c_j` with a random sign; `Q_obs[t, j] ~ N(m_j, (γ·|m_j|)²)`.
/// * `Q_future[t, j] ~ N(m_j + δ_j·γ·|m_j|, (γ·|m_j|)²)` with `δ_j = ±1` random.
pub fn generate_instance(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    spec.validate()?;
    let d = spec.channels;
    let gamma = spec.drift_gamma;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let lognormal = LogNormal::new(spec.scale_log_mean, spec.scale_log_std)
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut scales: Vec<f64> = (0..d).map(|_| lognormal.sample(&mut rng)).collect();
    let mut planted = index::sample(&mut rng, d, ceil_count(spec.outlier_fraction, d)).into_vec();
    planted.sort_unstable();
    for &j in &planted {
        scales[j] *= spec.outlier_scale;
    }

    let mut k = Vec::with_capacity(spec.key_tokens * d);
    for _ in 0..spec.key_tokens {
        k.extend(scales.iter().map(|c| c * normal(&mut rng)));
    }

    let means: Vec<f64> = scales
        .iter()
        .map(|&c| if rng.random::<bool>() { c } else { -c })
        .collect();
    let shifts: Vec<f64> = means
        .iter()
        .map(|m| if rng.random::<bool>() { gamma * m.abs() } else { -gamma * m.abs() })
        .collect();

    let mut q_obs = Vec::with_capacity(spec.obs_tokens * d);
    for _ in 0..spec.obs_tokens {
        q_obs.extend(means.iter().map(|m| m + gamma * m.abs() * normal(&mut rng)));
    }
    let mut q_future = Vec::with_capacity(spec.future_tokens * d);
    for _ in 0..spec.future_tokens {
        q_future.extend(
            means
                .iter()
                .zip(&shifts)
                .map(|(m, s)| m + s + gamma * m.abs() * normal(&mut rng)),
        );
    }

    Ok(SyntheticInstance {
        q_obs: ChannelMatrix::new(spec.obs_tokens, d, q_obs)?,
        k: ChannelMatrix::new(spec.key_tokens, d, k)?,
        q_future: ChannelMatrix::new(spec.future_tokens, d, q_future)?,
        scales,
        planted,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftResult {
    pub selector: Selector,
    pub protection_enabled: bool,
    /// `‖Q_obs Kᵀ − Q_obs S Kᵀ‖_F / ‖Q_obs Kᵀ‖_F`.
    pub error_obs: f64,
    /// Same ratio with the future queries and the same pruned set.
    pub error_future: f64,
    /// `error_future / error_obs`, `+∞` when `error_obs == 0`.
    pub ratio: f64,
    /// The single selection both errors were computed from.
    pub selection: PruneSelection,
}

/// Selects on the observation window, then scores that one pruned set against
/// both the observed and the future queries.
pub fn drift_evaluate(
    q_obs: &ChannelMatrix,
    k: &ChannelMatrix,
    q_future: &ChannelMatrix,
    selector: Selector,
    lambda: f64,
    policy: &ProtectionPolicy,
    seed: u64,
) -> Result<DriftResult> {
    check_widths(q_obs, k)?;
    check_widths(q_future, k)?;
    let selection = select(selector, q_obs, k, lambda, policy, seed)?;
    let error_obs = relative_error(q_obs, k, &selection.pruned)?;
    let error_future = relative_error(q_future, k, &selection.pruned)?;
    let ratio = if error_obs == 0.0 {
        f64::INFINITY
    } else {
        error_future / error_obs
    };
    Ok(DriftResult {
        selector,
        protection_enabled: policy.enabled(),
        error_obs,
        error_future,
        ratio,
        selection,
    })
}
