//! Built-in self-check: runs the core invariant suites on seeded random instances.

use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{build_interaction_graph, min_eigenvalue, quadratic_form, restricted_eigenvalues, InteractionGraph};
use crate::matrix::{ChannelMatrix, IndexSet};
use crate::prune::{mies_select_graph, oracle_select_graph, think_select, Mies};
use crate::recon::reconstruction_error_sq;

pub const SUITES: [&str; 5] = ["symmetry", "decomposition", "score_update", "oracle_dominance", "psd"];

const REL_TOL: f64 = 1e-9;
/// Oracle dominance runs on the first few channels only, to keep enumeration cheap.
const ORACLE_CHANNELS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub instances: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0, instances: 64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub seed: u64,
    pub subset: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub name: &'static str,
    pub checks: u64,
    pub failures: u64,
    pub first_failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySummary {
    pub suites: Vec<SuiteSummary>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.failures == 0)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteSummary> {
        self.suites.iter().find(|s| s.name == name)
    }

    /// `Ok(self)` when every suite passed, otherwise the first failure as [`Error::Invariant`].
    pub fn into_result(self) -> Result<Self> {
        match self.suites.iter().find_map(|s| s.first_failure.as_ref().map(|f| (s.name, f))) {
            None => Ok(self),
            Some((suite, f)) => Err(Error::Invariant {
                suite: suite.to_string(),
                seed: f.seed,
                subset: f.subset.clone(),
                detail: f.detail.clone(),
            }),
        }
    }
}

impl fmt::Display for VerifySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            let status = if s.failures == 0 { "ok" } else { "FAILED" };
            write!(f, "{:<17} {:>7} checks {:>5} failures  {status}", s.name, s.checks, s.failures)?;
            if let Some(fail) = &s.first_failure {
                write!(f, "  (seed {}, subset {:?}: {})", fail.seed, fail.subset, fail.detail)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Tally {
    checks: u64,
    failures: u64,
    first: Option<Failure>,
}

impl Tally {
    fn check(&mut self, ok: bool, seed: u64, subset: impl FnOnce() -> Vec<usize>, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(Failure {
                    seed,
                    subset: subset(),
                    detail: detail(),
                });
            }
        }
    }

    fn merge(&mut self, other: Tally) {
        self.checks += other.checks;
        self.failures += other.failures;
        if self.first.is_none() {
            self.first = other.first;
        }
    }
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= REL_TOL * scale.max(f64::MIN_POSITIVE)
}

/// `Σ_{i,j∈S} |W_ij|`, the magnitude against which `f(S)` round-off is judged.
fn abs_scale(g: &InteractionGraph, s: &[usize]) -> f64 {
    s.iter().flat_map(|&i| s.iter().map(move |&j| g.weight(i, j).abs())).sum()
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scales: &[f64]) -> ChannelMatrix {
    let data = (0..rows * cols)
        .map(|i| scales[i % cols] * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ChannelMatrix::new(rows, cols, data).expect("finite gaussian sample")
}

fn random_subset(rng: &mut ChaCha8Rng, d: usize) -> Vec<usize> {
    let size = rng.random_range(0..=d);
    sample(rng, d, size).into_vec()
}

fn leading_columns(m: &ChannelMatrix, n: usize) -> ChannelMatrix {
    let cols: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    ChannelMatrix::from_columns(&cols).expect("non-empty")
}

struct Checked {
    tallies: [Tally; 5],
}

fn check_instance<B>(seed: u64, build: &B) -> Result<Checked>
where
    B: Fn(&ChannelMatrix, &ChannelMatrix) -> Result<InteractionGraph>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=32);
    let l = rng.random_range(4..=32);
    let l_obs = rng.random_range(4..=32);
    let scales: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0f64..1.0).exp()).collect();
    let q = gaussian(&mut rng, l_obs, d, &scales);
    let k = gaussian(&mut rng, l, d, &scales);
    let g = build(&q, &k)?;
    let mut t: [Tally; 5] = Default::default();
    let [symmetry, decomposition, score_update, dominance, psd] = &mut t;

    for i in 0..d {
        for j in i + 1..d {
            let (a, b) = (g.weight(i, j), g.weight(j, i));
            symmetry.check(
                close(a, b, a.abs().max(b.abs())),
                seed,
                || vec![i, j],
                || format!("W[{i},{j}] = {a} but W[{j},{i}] = {b}"),
            );
        }
    }

    for _ in 0..8 {
        let s = random_subset(&mut rng, d);
        let set = IndexSet::new(s.clone(), d)?;
        let via_graph = quadratic_form(&g, &set)?;
        let direct = reconstruction_error_sq(&q, &k, &set)?;
        decomposition.check(
            close(via_graph, direct, abs_scale(&g, &s)),
            seed,
            || s.clone(),
            || format!("1ᵀW1 = {via_graph}, direct = {direct}"),
        );
        psd.check(
            via_graph >= -REL_TOL * abs_scale(&g, &s),
            seed,
            || s.clone(),
            || format!("negative quadratic form {via_graph}"),
        );
    }

    let mut mies = Mies::new(&g, &IndexSet::empty())?;
    let steps = rng.random_range(1..=d);
    for _ in 0..steps {
        for (c, cumulative) in mies.cumulative_scores().collect::<Vec<_>>() {
            let mut s = mies.pruned().to_vec();
            s.push(c);
            let direct = quadratic_form(&g, &IndexSet::new(s.clone(), d)?)?;
            score_update.check(
                close(cumulative, direct, abs_scale(&g, &s)),
                seed,
                || s.clone(),
                || format!("f(P) + s_c = {cumulative}, f(P ∪ {{c}}) = {direct}"),
            );
        }
        mies.step();
    }

    let frob = g.frobenius_norm();
    let mu = min_eigenvalue(&g);
    psd.check(
        mu >= -REL_TOL * frob,
        seed,
        || (0..d).collect(),
        || format!("smallest eigenvalue {mu} of W (‖W‖_F = {frob})"),
    );

    let m = d.min(ORACLE_CHANNELS);
    let (qs, ks) = (leading_columns(&q, m), leading_columns(&k, m));
    let gs = build(&qs, &ks)?;
    let lambda = rng.random_range(0.1..0.9);
    let none = IndexSet::empty();
    let best = oracle_select_graph(&gs, &qs, &ks, lambda, &none, u128::MAX)?;
    let greedy = mies_select_graph(&gs, &qs, &ks, lambda, &none)?;
    let think = think_select(&qs, &ks, lambda, &none)?;
    let cert = restricted_eigenvalues(&gs, best.n_prune.max(1))?;
    let n = best.n_prune as f64;
    for other in [&greedy, &think] {
        dominance.check(
            best.error_sq <= other.error_sq * (1.0 + REL_TOL) + REL_TOL,
            seed,
            || other.pruned.sorted(),
            || format!("{} error {} below exhaustive optimum {}", other.selector, other.error_sq, best.error_sq),
        );
    }
    if best.n_prune > 0 {
        for sel in [&best, &greedy, &think] {
            let f = quadratic_form(&gs, &sel.pruned)?;
            let slack = REL_TOL * abs_scale(&gs, sel.pruned.as_slice());
            dominance.check(
                n * cert.mu_min - slack <= f && f <= n * cert.mu_max + slack,
                seed,
                || sel.pruned.sorted(),
                || format!("f = {f} outside [{}, {}]", n * cert.mu_min, n * cert.mu_max),
            );
        }
    }
    Ok(Checked { tallies: t })
}

/// Runs every suite on `opts.instances` seeded instances with the standard graph builder.
pub fn verify(opts: &VerifyOptions) -> Result<VerifySummary> {
    verify_with(opts, build_interaction_graph)
}

/// As [`verify`], with the graph built by `build`. Tests use this to inject corrupted graphs.
pub fn verify_with<B>(opts: &VerifyOptions, build: B) -> Result<VerifySummary>
where
    B: Fn(&ChannelMatrix, &ChannelMatrix) -> Result<InteractionGraph> + Sync,
{
    let seeds: Vec<u64> = (0..opts.instances).map(|i| opts.seed.wrapping_add(i)).collect();
    let per_seed = seeds
        .par_iter()
        .map(|&s| check_instance(s, &build))
        .collect::<Result<Vec<_>>>()?;
    let mut totals: [Tally; 5] = Default::default();
    // merged in seed order so the first failure does not depend on scheduling
    for c in per_seed {
        for (total, t) in totals.iter_mut().zip(c.tallies) {
            total.merge(t);
        }
    }
    Ok(VerifySummary {
        suites: SUITES
            .iter()
            .zip(totals)
            .map(|(&name, t)| SuiteSummary {
                name,
                checks: t.checks,
                failures: t.failures,
                first_failure: t.first,
            })
            .collect(),
    })
}

/// A graph builder whose output has `W[0][1]` perturbed, breaking symmetry.
pub fn asymmetric_builder(q: &ChannelMatrix, k: &ChannelMatrix) -> Result<InteractionGraph> {
    let g = build_interaction_graph(q, k)?;
    let d = g.dim();
    let mut w = g.weights().to_vec();
    if d > 1 {
        w[1] += 1.0 + w[1].abs();
    }
    InteractionGraph::from_weights(d, w)
}
