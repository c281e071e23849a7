use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::InteractionGraph;
use crate::error::{Error, Result};
use crate::subsets::{binomial, Combinations, DEFAULT_ENUMERATION_CAP};

const OFF_DIAGONAL_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric `n × n` row-major matrix, ascending.
///
/// Cyclic Jacobi: sweeps over `(p, q)` pairs in row order, annihilating each
/// off-diagonal element with a plane rotation, until the off-diagonal
/// Frobenius norm falls below `1e-10·‖A‖_F`. Only the upper triangle is read.
pub fn symmetric_eigenvalues(n: usize, a: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), n * n, "expected {n}x{n} matrix");
    let mut m = a.to_vec();
    for i in 0..n {
        for j in 0..i {
            m[i * n + j] = m[j * n + i];
        }
    }
    let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = OFF_DIAGONAL_TOL * norm;

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(n, &m);
        if off <= tol || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(n, &mut m, p, q, c, s);
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

fn off_diagonal_norm(n: usize, m: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[i * n + j] * m[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Applies `Jᵀ M J` for the rotation in the `(p, q)` plane.
fn rotate(n: usize, m: &mut [f64], p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        let mkp = m[k * n + p];
        let mkq = m[k * n + q];
        m[k * n + p] = c * mkp - s * mkq;
        m[k * n + q] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let mpk = m[p * n + k];
        let mqk = m[q * n + k];
        m[p * n + k] = c * mpk - s * mqk;
        m[q * n + k] = s * mpk + c * mqk;
    }
    m[p * n + q] = 0.0;
    m[q * n + p] = 0.0;
}

/// Smallest eigenvalue of the full interaction matrix.
pub fn min_eigenvalue(g: &InteractionGraph) -> f64 {
    symmetric_eigenvalues(g.dim(), g.weights())[0]
}

/// Restricted eigenvalue bounds over supports of exactly `k` channels.
///
/// `mu_min·‖x‖² ≤ xᵀWx ≤ mu_max·‖x‖²` for every `x` supported on `k` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCertificate {
    pub k: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    /// `mu_max / mu_min`, or `+∞` when `mu_min == 0`.
    pub kappa: f64,
    /// Support attaining `mu_min` (lexicographically smallest among ties).
    pub argmin_support: Vec<usize>,
    /// Support attaining `mu_max` (lexicographically smallest among ties).
    pub argmax_support: Vec<usize>,
    /// Number of supports evaluated.
    pub evaluated: u128,
    /// True when the bounds come from random supports and are therefore only
    /// inner estimates of the true restricted eigenvalues.
    pub sampled: bool,
}

impl EigenCertificate {
    pub fn is_finite_kappa(&self) -> bool {
        self.kappa.is_finite()
    }
}

#[derive(Clone)]
struct Extremes {
    min: (f64, Vec<usize>),
    max: (f64, Vec<usize>),
    count: u128,
}

impl Extremes {
    fn identity() -> Self {
        Self {
            min: (f64::INFINITY, Vec::new()),
            max: (f64::NEG_INFINITY, Vec::new()),
            count: 0,
        }
    }

    fn observe(&mut self, support: &[usize], lo: f64, hi: f64) {
        self.count += 1;
        if lo < self.min.0 || (lo == self.min.0 && support < self.min.1.as_slice()) {
            self.min = (lo, support.to_vec());
        }
        if hi > self.max.0 || (hi == self.max.0 && support < self.max.1.as_slice()) {
            self.max = (hi, support.to_vec());
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.count += other.count;
        if other.min.0 < self.min.0 || (other.min.0 == self.min.0 && other.min.1 < self.min.1) {
            self.min = other.min;
        }
        if other.max.0 > self.max.0 || (other.max.0 == self.max.0 && other.max.1 < self.max.1) {
            self.max = other.max;
        }
        self
    }
}

fn evaluate(g: &InteractionGraph, support: &[usize], acc: &mut Extremes) {
    let eig = symmetric_eigenvalues(support.len(), &g.principal_submatrix(support));
    acc.observe(support, eig[0], eig[eig.len() - 1]);
}

fn certificate(g: &InteractionGraph, k: usize, ext: Extremes, sampled: bool) -> Result<EigenCertificate> {
    let mut mu_min = ext.min.0;
    // Round-off can push the smallest eigenvalue of a PSD submatrix just below zero.
    if mu_min < 0.0 {
        if mu_min >= -1e-8 * g.frobenius_norm() {
            mu_min = 0.0;
        } else {
            return Err(Error::arg(format!(
                "interaction matrix is not positive semi-definite on support {:?} (λ_min = {mu_min})",
                ext.min.1
            )));
        }
    }
    let mu_max = ext.max.0.max(mu_min);
    let kappa = if mu_min > 0.0 { mu_max / mu_min } else { f64::INFINITY };
    Ok(EigenCertificate {
        k,
        mu_min,
        mu_max,
        kappa,
        argmin_support: ext.min.1,
        argmax_support: ext.max.1,
        evaluated: ext.count,
        sampled,
    })
}

fn check_k(g: &InteractionGraph, k: usize) -> Result<()> {
    if k == 0 || k > g.dim() {
        return Err(Error::arg(format!(
            "support size {k} must lie in 1..={}",
            g.dim()
        )));
    }
    Ok(())
}

/// Exhaustive restricted eigenvalues with the default cap of 2×10⁶ supports.
pub fn restricted_eigenvalues(g: &InteractionGraph, k: usize) -> Result<EigenCertificate> {
    restricted_eigenvalues_with_cap(g, k, DEFAULT_ENUMERATION_CAP)
}

/// Enumerates every size-`k` principal submatrix of `W`.
///
/// Work is split by the smallest index of the support and reduced by min/max,
/// so the result does not depend on how rayon schedules the partitions.
pub fn restricted_eigenvalues_with_cap(
    g: &InteractionGraph,
    k: usize,
    cap: u128,
) -> Result<EigenCertificate> {
    check_k(g, k)?;
    let d = g.dim();
    let required = binomial(d, k);
    if required > cap {
        return Err(Error::Capacity { required, cap });
    }
    let ext = (0..=d - k)
        .into_par_iter()
        .map(|first| {
            let mut acc = Extremes::identity();
            let mut rest = Combinations::new((first + 1..d).collect(), k - 1);
            let mut support = Vec::with_capacity(k);
            while let Some(tail) = rest.next_subset() {
                support.clear();
                support.push(first);
                support.extend_from_slice(tail);
                evaluate(g, &support, &mut acc);
            }
            acc
        })
        .reduce(Extremes::identity, Extremes::merge);
    certificate(g, k, ext, false)
}

/// Estimates restricted eigenvalues from `samples` uniformly random supports.
///
/// The true `mu_min` can only be smaller and the true `mu_max` only larger.
pub fn restricted_eigenvalues_sampled(
    g: &InteractionGraph,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<EigenCertificate> {
    check_k(g, k)?;
    if samples == 0 {
        return Err(Error::arg("sampled mode needs at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Extremes::identity();
    for _ in 0..samples {
        let mut support = rand::seq::index::sample(&mut rng, g.dim(), k).into_vec();
        support.sort_unstable();
        evaluate(g, &support, &mut acc);
    }
    certificate(g, k, acc, true)
}
