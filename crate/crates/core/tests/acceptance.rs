//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

use std::process::Command;
use std::time::{Duration, Instant};

use chanelim::cli::config::{ExperimentConfig, Protection};
use chanelim::cli::experiment::run_experiment;
use chanelim::cli::io::{decode_grcm, encode_grcm};
use chanelim::graph::{min_eigenvalue, restricted_eigenvalues};
use chanelim::prune::{
    clamp_fraction, mies_select_graph, oracle_select_graph, protect_by_norms, think_select, Mies,
};
use chanelim::sim::{drift_evaluate, generate_instance, SyntheticSpec};
use chanelim::subsets::Combinations;
use chanelim::{
    build_interaction_graph, decomposed_error_sq, quadratic_form, reconstruction_error_sq, ChannelMatrix,
    IndexSet, InteractionGraph, ProtectionPolicy, Selector,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scales: &[f64]) -> ChannelMatrix {
    let data = (0..rows * cols)
        .map(|i| scales[i % cols] * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ChannelMatrix::new(rows, cols, data).unwrap()
}

/// A random `(q, k)` pair with `L, L_obs ∈ 4..=32` and per-channel scales spread over e^±1.
fn random_pair(rng: &mut ChaCha8Rng, d: usize) -> (ChannelMatrix, ChannelMatrix) {
    let l = rng.random_range(4..=32);
    let l_obs = rng.random_range(4..=32);
    let scales: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0f64..1.0).exp()).collect();
    let q = gaussian(rng, l_obs, d, &scales);
    let k = gaussian(rng, l, d, &scales);
    (q, k)
}

/// `‖Q Kᵀ − Q_keep K_keepᵀ‖²_F` by forming both products in full.
fn naive_error_sq(q: &ChannelMatrix, k: &ChannelMatrix, pruned: &[usize]) -> f64 {
    let keep: Vec<usize> = (0..q.cols()).filter(|j| !pruned.contains(j)).collect();
    let mut total = 0.0;
    for r in 0..q.rows() {
        for s in 0..k.rows() {
            let full: f64 = (0..q.cols()).map(|j| q.get(r, j) * k.get(s, j)).sum();
            let kept: f64 = keep.iter().map(|&j| q.get(r, j) * k.get(s, j)).sum();
            total += (full - kept).powi(2);
        }
    }
    total
}

fn abs_mass(g: &InteractionGraph, s: &[usize]) -> f64 {
    s.iter().flat_map(|&i| s.iter().map(move |&j| g.weight(i, j).abs())).sum()
}

fn criterion_1() -> Outcome {
    let worst = (0..500u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = rng.random_range(2..=32);
            let (q, k) = random_pair(&mut rng, d);
            let g = build_interaction_graph(&q, &k).unwrap();
            let mut worst: f64 = 0.0;
            for _ in 0..5 {
                let size = rng.random_range(0..=d);
                let s = sample(&mut rng, d, size).into_vec();
                let set = IndexSet::new(s.clone(), d).unwrap();
                let decomposed = decomposed_error_sq(&g, &set).unwrap();
                let direct = reconstruction_error_sq(&q, &k, &set).unwrap();
                let naive = naive_error_sq(&q, &k, &s);
                for v in [direct, naive] {
                    worst = worst.max((decomposed - v).abs() / v.abs().max(1.0));
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    outcome(
        worst <= 1e-9,
        format!("500 instances x 5 subsets, max |decomposed - direct| / max(1, value) = {worst:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let (checks, worst) = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
            let d = rng.random_range(2..=32);
            let (q, k) = random_pair(&mut rng, d);
            let g = build_interaction_graph(&q, &k).unwrap();
            let mut mies = Mies::new(&g, &IndexSet::empty()).unwrap();
            let (mut checks, mut worst) = (0u64, 0.0f64);
            loop {
                for (c, cumulative) in mies.cumulative_scores().collect::<Vec<_>>() {
                    let mut s = mies.pruned().to_vec();
                    s.push(c);
                    let direct = quadratic_form(&g, &IndexSet::new(s.clone(), d).unwrap()).unwrap();
                    let rel = (cumulative - direct).abs() / abs_mass(&g, &s).max(f64::MIN_POSITIVE);
                    worst = worst.max(rel);
                    checks += 1;
                }
                if mies.step().is_none() {
                    break;
                }
            }
            (checks, worst)
        })
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    outcome(
        worst <= 1e-9,
        format!("200 instances, {checks} (step, candidate) checks, max relative deviation {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let results: Vec<(bool, Option<bool>)> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(20_000 + seed);
            let (q, k) = random_pair(&mut rng, 10);
            let g = build_interaction_graph(&q, &k).unwrap();
            let none = IndexSet::empty();
            let best = oracle_select_graph(&g, &q, &k, 0.5, &none, u128::MAX).unwrap();
            let greedy = mies_select_graph(&g, &q, &k, 0.5, &none).unwrap();
            assert_eq!((best.n_prune, greedy.n_prune), (5, 5));
            let f_best = quadratic_form(&g, &best.pruned).unwrap();
            let f_greedy = quadratic_form(&g, &greedy.pruned).unwrap();
            let cert = restricted_eigenvalues(&g, 5).unwrap();
            let bound = (cert.mu_min > 1e-8).then_some(f_greedy <= cert.kappa * f_best + 1e-9);
            (f_best <= f_greedy, bound)
        })
        .collect();
    let dominated = results.iter().filter(|r| r.0).count();
    let bounded: Vec<bool> = results.iter().filter_map(|r| r.1).collect();
    let within = bounded.iter().filter(|&&b| b).count();
    outcome(
        dominated == results.len() && within == bounded.len(),
        format!(
            "f(oracle) <= f(MIES) on {dominated}/200; kappa bound holds on {within}/{} with mu_min > 1e-8",
            bounded.len()
        ),
    )
}

fn criterion_4() -> Outcome {
    let spec = SyntheticSpec::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda in [0.5, 0.6] {
        let pairs: Vec<(f64, f64)> = (0..500u64)
            .into_par_iter()
            .map(|seed| {
                let inst = generate_instance(&spec.with_seed(seed)).unwrap();
                let g = build_interaction_graph(&inst.q_obs, &inst.k).unwrap();
                let none = IndexSet::empty();
                let m = mies_select_graph(&g, &inst.q_obs, &inst.k, lambda, &none).unwrap();
                let t = think_select(&inst.q_obs, &inst.k, lambda, &none).unwrap();
                (m.error_sq, t.error_sq)
            })
            .collect();
        let n = pairs.len() as f64;
        let mean_m = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_t = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let wins = pairs.iter().filter(|p| p.0 <= p.1).count();
        let ok = mean_m <= mean_t && wins as f64 >= 0.6 * n;
        pass &= ok;
        parts.push(format!(
            "lambda {lambda}: mean MIES {mean_m:.4e} vs THINK {mean_t:.4e}, MIES wins/ties {wins}/500"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_5() -> Outcome {
    let default = ProtectionPolicy::default();
    let r = protect_by_norms(&[1.0, 1.0, 1.0, 1.0, 10.0], &default);
    let stats_ok = (r.mean - 2.8).abs() < 1e-12 && (r.std - 3.6).abs() < 1e-12 && (r.threshold - 6.4).abs() < 1e-12;
    let set_ok = r.protected.sorted() == vec![4] && r.raw_fraction == 0.2;

    // σ = 0 puts the threshold at the mean: five of ten norms exceed it, p = 0.5 → b
    let half = ProtectionPolicy::new(0.0, 0.01, 0.125).unwrap();
    let norms: Vec<f64> = [1.0; 5].into_iter().chain([3.0; 5]).collect();
    let h = protect_by_norms(&norms, &half);
    let high_ok = h.raw_fraction == 0.5 && h.clamped_fraction == 0.125 && h.protected.sorted() == vec![5, 6];

    // identical norms: nothing exceeds mean + σ·0, p = 0 → a
    let z = protect_by_norms(&[2.0; 8], &default);
    let low_ok = z.raw_fraction == 0.0 && z.clamped_fraction == 0.01 && z.protected.sorted() == vec![0];

    let fn_ok = clamp_fraction(0.5, 0.01, 0.125) == 0.125 && clamp_fraction(0.0, 0.01, 0.125) == 0.01;
    outcome(
        stats_ok && set_ok && high_ok && low_ok && fn_ok,
        format!(
            "[1,1,1,1,10]: mean {}, std {}, tau {}, protected {:?}; p=0.5 -> {}, p=0 -> {}",
            r.mean,
            r.std,
            r.threshold,
            r.protected.sorted(),
            h.clamped_fraction,
            z.clamped_fraction
        ),
    )
}

fn criterion_6() -> Outcome {
    let spec = SyntheticSpec {
        channels: 128,
        outlier_fraction: 0.05,
        outlier_scale: 10.0,
        drift_gamma: 0.5,
        ..SyntheticSpec::default()
    };
    let on = ProtectionPolicy::default();
    let off = ProtectionPolicy::disabled();
    let rows: Vec<(f64, f64, bool)> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let inst = generate_instance(&spec.with_seed(seed)).unwrap();
            let eval = |p: &ProtectionPolicy| {
                drift_evaluate(&inst.q_obs, &inst.k, &inst.q_future, Selector::Mies, 0.6, p, seed).unwrap()
            };
            let (a, b) = (eval(&on), eval(&off));
            (a.error_future, b.error_future, a.selection.pruned.sorted() != b.selection.pruned.sorted())
        })
        .collect();
    let diffs: Vec<f64> = rows.iter().map(|r| r.0 - r.1).collect();
    let n = diffs.len();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut boot: Vec<f64> = (0..10_000)
        .map(|_| (0..n).map(|_| diffs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    boot.sort_by(f64::total_cmp);
    let upper = boot[(0.95 * boot.len() as f64) as usize];
    let changed = rows.iter().filter(|r| r.2).count();
    outcome(
        upper <= 0.0,
        format!(
            "mean future error on {:.6e} vs off {:.6e}; 95% bootstrap upper bound of (on - off) = {upper:.3e}; \
             protection changed the pruned set on {changed}/{n} seeds",
            mean(&rows.iter().map(|r| r.0).collect::<Vec<_>>()),
            mean(&rows.iter().map(|r| r.1).collect::<Vec<_>>()),
        ),
    )
}

fn criterion_7() -> Outcome {
    let results: Vec<(f64, u64, u64)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(30_000 + seed);
            let d = rng.random_range(2..=12);
            let (q, k) = random_pair(&mut rng, d);
            let g = build_interaction_graph(&q, &k).unwrap();
            let psd_margin = min_eigenvalue(&g) / g.frobenius_norm();
            let (mut checked, mut violations) = (0u64, 0u64);
            for size in 1..=d {
                let cert = restricted_eigenvalues(&g, size).unwrap();
                let mut all = Combinations::new((0..d).collect(), size);
                while let Some(s) = all.next_subset() {
                    let f = quadratic_form(&g, &IndexSet::new(s.to_vec(), d).unwrap()).unwrap();
                    let slack = 1e-9 * abs_mass(&g, s);
                    let n = size as f64;
                    checked += 1;
                    if !(n * cert.mu_min - slack <= f && f <= n * cert.mu_max + slack) {
                        violations += 1;
                    }
                }
            }
            (psd_margin, checked, violations)
        })
        .collect();
    let worst = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let checked: u64 = results.iter().map(|r| r.1).sum();
    let violations: u64 = results.iter().map(|r| r.2).sum();
    outcome(
        worst >= -1e-8 && violations == 0,
        format!(
            "100 instances: min lambda_min(W) / |W|_F = {worst:.2e}; Rayleigh bounds hold on {}/{checked} supports",
            checked - violations
        ),
    )
}

fn criterion_8() -> Outcome {
    let cfg = ExperimentConfig {
        seed_count: 8,
        selectors: Selector::ALL.to_vec(),
        protection: Protection::Both,
        spec: SyntheticSpec {
            channels: 16,
            ..SyntheticSpec::default()
        },
        oracle: true,
        ..ExperimentConfig::default()
    };
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = serial.install(|| run_experiment(&cfg)).unwrap().to_csv(&cfg);
    let b = run_experiment(&cfg).unwrap().to_csv(&cfg);
    let csv_ok = a == b;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let round_trips = (0..100)
        .filter(|_| {
            let (rows, cols) = (rng.random_range(1..=40), rng.random_range(1..=40));
            let data = (0..rows * cols)
                .map(|_| loop {
                    let x = f64::from_bits(rng.random());
                    if x.is_finite() {
                        break x;
                    }
                })
                .collect();
            let m = ChannelMatrix::new(rows, cols, data).unwrap();
            let bytes = encode_grcm(&m).unwrap();
            let back = decode_grcm(&bytes).unwrap();
            encode_grcm(&back).unwrap() == bytes
                && back.as_slice().iter().zip(m.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits())
        })
        .count();

    let bin = env!("CARGO_BIN_EXE_chanelim");
    let clean = Command::new(bin).args(["verify", "--instances", "32"]).output().unwrap();
    let corrupt = Command::new(bin)
        .args(["verify", "--instances", "32", "--inject-corruption"])
        .output()
        .unwrap();
    let verify_ok = clean.status.code() == Some(0) && corrupt.status.code().is_some_and(|c| c != 0);
    outcome(
        csv_ok && round_trips == 100 && verify_ok,
        format!(
            "CSV identical across thread counts: {csv_ok} ({} bytes); GRCM bit-exact {round_trips}/100; \
             verify exit clean {:?}, corrupted {:?}",
            a.len(),
            clean.status.code(),
            corrupt.status.code()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("decomposition identity", criterion_1, Some(Duration::from_secs(10))),
        ("MIES score-update soundness", criterion_2, Some(Duration::from_secs(30))),
        ("oracle dominance and condition-number bound", criterion_3, Some(Duration::from_secs(120))),
        ("MIES vs THINK direction", criterion_4, Some(Duration::from_secs(60))),
        ("protection mechanism", criterion_5, None),
        ("drift benefit of protection", criterion_6, Some(Duration::from_secs(120))),
        ("PSD and Rayleigh certificates", criterion_7, None),
        ("determinism and I/O", criterion_8, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let o = run();
        let elapsed = started.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = match limit {
            Some(l) => format!("{:.2} s, limit {} s", elapsed.as_secs_f64(), l.as_secs()),
            None => format!("{:.2} s", elapsed.as_secs_f64()),
        };
        println!(
            "{} criterion {}: {name}: {} ({budget}{})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            if in_time { "" } else { ", over time limit" }
        );
    }
    println!("acceptance: {}/8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
