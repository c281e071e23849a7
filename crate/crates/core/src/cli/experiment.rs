//! Sweeps over seeds, pruning ratios, selectors and protection settings.

use std::time::Instant;

use rayon::prelude::*;

use crate::cli::config::{ExperimentConfig, Mode};
use crate::cli::io::load_matrix;
use crate::cli::report::{ApproxRatio, ExperimentReport, ReportRow};
use crate::error::{Error, Result};
use crate::graph::{build_interaction_graph, InteractionGraph};
use crate::matrix::{ChannelMatrix, IndexSet};
use crate::prune::{
    mies_select_graph, oracle_select_graph, protect_channels, random_select_graph, think_select,
    PruneSelection, Selector,
};
use crate::recon::{attention_norm_sq, check_widths, relative_error};
use crate::sim::generate_instance;

/// The matrices one sweep instance is evaluated on.
#[derive(Debug, Clone)]
pub struct Instance {
    pub q_obs: ChannelMatrix,
    pub k: ChannelMatrix,
    pub q_future: Option<ChannelMatrix>,
}

/// Matrices loaded once for file mode and shared by every seed.
pub fn load_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    let need = |p: &Option<std::path::PathBuf>, what: &str| {
        p.clone()
            .ok_or_else(|| Error::Config(format!("file mode requires {what}")))
    };
    let q_obs = load_matrix(need(&cfg.q_path, "q_path")?)?;
    let k = load_matrix(need(&cfg.k_path, "k_path")?)?;
    check_widths(&q_obs, &k)?;
    let q_future = match &cfg.q_future_path {
        Some(p) => {
            let m = load_matrix(p)?;
            check_widths(&m, &k)?;
            Some(m)
        }
        None => None,
    };
    Ok(Instance { q_obs, k, q_future })
}

fn instance_for_seed(cfg: &ExperimentConfig, shared: Option<&Instance>, seed: u64) -> Result<Instance> {
    match (cfg.mode, shared) {
        (Mode::FromFiles, Some(inst)) => Ok(inst.clone()),
        (Mode::FromFiles, None) => load_instance(cfg),
        (Mode::Synthetic, _) => {
            let s = generate_instance(&cfg.spec.with_seed(seed))?;
            Ok(Instance {
                q_obs: s.q_obs,
                k: s.k,
                q_future: Some(s.q_future),
            })
        }
    }
}

/// Runs one selector on a prepared instance.
pub fn run_selector(
    selector: Selector,
    g: &InteractionGraph,
    inst: &Instance,
    lambda: f64,
    protected: &IndexSet,
    seed: u64,
    oracle_cap: u128,
) -> Result<PruneSelection> {
    let (q, k) = (&inst.q_obs, &inst.k);
    match selector {
        Selector::Mies => mies_select_graph(g, q, k, lambda, protected),
        Selector::Think => think_select(q, k, lambda, protected),
        Selector::Random => random_select_graph(g, q, k, lambda, protected, seed),
        Selector::Oracle => oracle_select_graph(g, q, k, lambda, protected, oracle_cap),
    }
}

fn rows_for_seed(
    cfg: &ExperimentConfig,
    shared: Option<&Instance>,
    instance_id: u64,
    seed: u64,
) -> Result<Vec<ReportRow>> {
    let inst = instance_for_seed(cfg, shared, seed)?;
    let g = build_interaction_graph(&inst.q_obs, &inst.k)?;
    if attention_norm_sq(&inst.q_obs, &inst.k)? == 0.0 {
        return Err(Error::Degenerate("attention product Q·Kᵀ is all zero".into()));
    }
    let mut rows = Vec::new();
    for &protect in cfg.protection.flags() {
        let protected = protect_channels(&inst.k, &cfg.policy_for(protect));
        for &lambda in &cfg.lambdas {
            // f(S*) is shared by every selector at this (lambda, protection) cell
            let optimum = if cfg.oracle || cfg.selectors.contains(&Selector::Oracle) {
                match run_selector(Selector::Oracle, &g, &inst, lambda, &protected, seed, cfg.oracle_cap) {
                    Ok(sel) => Some(Ok(sel)),
                    Err(Error::Capacity { .. }) => Some(Err(())),
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            for &selector in &cfg.selectors {
                let started = Instant::now();
                let sel = match (selector, &optimum) {
                    (Selector::Oracle, Some(Ok(sel))) => sel.clone(),
                    (Selector::Oracle, _) => {
                        rows.push(skipped_oracle_row(&inst, instance_id, seed, lambda, protect, &protected));
                        continue;
                    }
                    _ => run_selector(selector, &g, &inst, lambda, &protected, seed, cfg.oracle_cap)?,
                };
                let elapsed = started.elapsed().as_secs_f64() * 1e3;
                let approx_ratio = match (&optimum, cfg.oracle) {
                    (_, false) => ApproxRatio::NotRequested,
                    (Some(Ok(best)), true) if best.error_sq == 0.0 => ApproxRatio::ZeroOptimum,
                    (Some(Ok(best)), true) => ApproxRatio::Value(sel.error_sq / best.error_sq),
                    (_, true) => ApproxRatio::Skipped,
                };
                let error_future = inst
                    .q_future
                    .as_ref()
                    .map(|qf| relative_error(qf, &inst.k, &sel.pruned))
                    .transpose()?;
                rows.push(ReportRow {
                    instance: instance_id,
                    seed,
                    selector,
                    lambda,
                    protect,
                    n_prune: sel.n_prune,
                    n_protected: protected.len(),
                    error_sq: Some(sel.error_sq),
                    relative_error: Some(relative_error(&inst.q_obs, &inst.k, &sel.pruned)?),
                    error_future,
                    approx_ratio,
                    wall_time_ms: cfg.timing.then_some(elapsed),
                });
            }
        }
    }
    Ok(rows)
}

fn skipped_oracle_row(
    inst: &Instance,
    instance: u64,
    seed: u64,
    lambda: f64,
    protect: bool,
    protected: &IndexSet,
) -> ReportRow {
    let d = inst.k.cols();
    let n_prune = crate::prune::ceil_count(lambda, d).min(d - protected.len());
    ReportRow {
        instance,
        seed,
        selector: Selector::Oracle,
        lambda,
        protect,
        n_prune,
        n_protected: protected.len(),
        error_sq: None,
        relative_error: None,
        error_future: None,
        approx_ratio: ApproxRatio::Skipped,
        wall_time_ms: None,
    }
}

/// Evaluates every `(seed, lambda, selector, protection)` cell of `cfg`.
///
/// Seeds run in parallel; rows are sorted by `(seed, lambda, selector, protection)`
/// afterwards so the report does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let shared = match cfg.mode {
        Mode::FromFiles => Some(load_instance(cfg)?),
        Mode::Synthetic => None,
    };
    let seeds: Vec<(u64, u64)> = cfg
        .seeds()
        .enumerate()
        .map(|(i, s)| match cfg.mode {
            Mode::Synthetic => (i as u64, s),
            Mode::FromFiles => (0, s),
        })
        .collect();
    let per_seed: Vec<Vec<ReportRow>> = seeds
        .par_iter()
        .map(|&(id, seed)| rows_for_seed(cfg, shared.as_ref(), id, seed))
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport {
        rows: per_seed.into_iter().flatten().collect(),
    };
    report.sort();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayMismatch {
    pub row: usize,
    pub recorded: f64,
    pub recomputed: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplaySummary {
    pub checked: usize,
    pub skipped: usize,
    pub mismatches: Vec<ReplayMismatch>,
}

/// Re-derives every row's pruned set from `(selector, lambda, seed, protection)`
/// and checks its recorded `error_sq` to `tolerance` relative.
pub fn replay(cfg: &ExperimentConfig, report: &ExperimentReport, tolerance: f64) -> Result<ReplaySummary> {
    let shared = match cfg.mode {
        Mode::FromFiles => Some(load_instance(cfg)?),
        Mode::Synthetic => None,
    };
    let mut summary = ReplaySummary::default();
    for (i, row) in report.rows.iter().enumerate() {
        let Some(recorded) = row.error_sq else {
            summary.skipped += 1;
            continue;
        };
        let inst = instance_for_seed(cfg, shared.as_ref(), row.seed)?;
        let g = build_interaction_graph(&inst.q_obs, &inst.k)?;
        let protected = protect_channels(&inst.k, &cfg.policy_for(row.protect));
        let sel = run_selector(row.selector, &g, &inst, row.lambda, &protected, row.seed, cfg.oracle_cap)?;
        let recomputed = crate::recon::reconstruction_error_sq(&inst.q_obs, &inst.k, &sel.pruned)?;
        summary.checked += 1;
        if (recomputed - recorded).abs() > tolerance * recorded.abs().max(1.0) {
            summary.mismatches.push(ReplayMismatch {
                row: i,
                recorded,
                recomputed,
            });
        }
    }
    Ok(summary)
}
