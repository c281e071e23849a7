use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chanelim::cli::config::ExperimentConfig;
use chanelim::cli::experiment::{load_instance, replay, run_experiment};
use chanelim::cli::io::save_matrix;
use chanelim::cli::report::parse_report;
use chanelim::cli::verify::{asymmetric_builder, verify, verify_with, VerifyOptions};
use chanelim::graph::build_interaction_graph;
use chanelim::prune::protect_channels;
use chanelim::{relative_error, Error, Result};

/// Prune key channels by their interaction graph and measure the error.
#[derive(Parser)]
#[command(name = "chanelim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance as q_obs.grcm, k.grcm and q_future.grcm into --out (a directory).
    Generate,
    /// Run one selector at one pruning ratio and print the pruned channels.
    Prune,
    /// Evaluate every configured seed, ratio, selector and protection setting; CSV to --out or stdout.
    Sweep,
    /// Run the invariant suites on seeded random instances.
    Verify {
        #[arg(long, default_value_t = 64)]
        instances: u64,
        /// Build a deliberately asymmetric W, for testing that failures are caught.
        #[arg(long, hide = true)]
        inject_corruption: bool,
    },
    /// Recompute every row of a sweep report and compare error_sq.
    Replay {
        report: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
}

#[derive(Args)]
struct Overrides {
    /// `key = value` config file; flags below override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of consecutive seeds to sweep.
    #[arg(long, global = true)]
    seeds: Option<u64>,
    #[arg(long, global = true, value_name = "X[,X...]")]
    lambda: Option<String>,
    #[arg(long, global = true, value_name = "NAME[,NAME...]")]
    selector: Option<String>,
    #[arg(long, global = true, overrides_with = "no_protect")]
    protect: bool,
    #[arg(long, global = true)]
    no_protect: bool,
    #[arg(long, global = true, value_name = "A,B")]
    protect_bounds: Option<String>,
    /// Also compute the exhaustive optimum and report approximation ratios.
    #[arg(long, global = true)]
    oracle: bool,
    #[arg(long, global = true)]
    timing: bool,
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Observed queries (GRCM or CSV); selects file mode together with --k.
    #[arg(long, global = true, value_name = "PATH")]
    q: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    k: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    q_future: Option<PathBuf>,
    /// Any other config key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        let path = |p: &Path| p.display().to_string();
        let mut pairs: Vec<(&str, String)> = Vec::new();
        if let Some(s) = self.seed {
            pairs.push(("seed", s.to_string()));
        }
        if let Some(n) = self.seeds {
            pairs.push(("seeds", n.to_string()));
        }
        if let Some(l) = &self.lambda {
            pairs.push(("lambdas", l.clone()));
        }
        if let Some(s) = &self.selector {
            pairs.push(("selectors", s.clone()));
        }
        if self.protect {
            pairs.push(("protect", "true".into()));
        }
        if self.no_protect {
            pairs.push(("protect", "false".into()));
        }
        if let Some(b) = &self.protect_bounds {
            pairs.push(("protect_bounds", b.clone()));
        }
        if self.oracle {
            pairs.push(("oracle", "true".into()));
        }
        if self.timing {
            pairs.push(("timing", "true".into()));
        }
        if let Some(q) = &self.q {
            pairs.push(("mode", "from-files".into()));
            pairs.push(("q_path", path(q)));
        }
        if let Some(k) = &self.k {
            pairs.push(("mode", "from-files".into()));
            pairs.push(("k_path", path(k)));
        }
        if let Some(f) = &self.q_future {
            pairs.push(("q_future_path", path(f)));
        }
        for (k, v) in pairs {
            cfg.set(k, &v)?;
        }
        if let Some(o) = &self.out {
            cfg.output = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn generate(cfg: &ExperimentConfig) -> Result<()> {
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    let inst = chanelim::sim::generate_instance(&cfg.spec.with_seed(cfg.seed_start))?;
    for (name, m) in [("q_obs.grcm", &inst.q_obs), ("k.grcm", &inst.k), ("q_future.grcm", &inst.q_future)] {
        save_matrix(m, dir.join(name))?;
    }
    println!(
        "wrote {}x{} q_obs, {}x{} k, {}x{} q_future to {} (seed {}, planted outliers {})",
        inst.q_obs.rows(),
        inst.q_obs.cols(),
        inst.k.rows(),
        inst.k.cols(),
        inst.q_future.rows(),
        inst.q_future.cols(),
        dir.display(),
        cfg.seed_start,
        join(&inst.planted),
    );
    Ok(())
}

fn prune(cfg: &ExperimentConfig) -> Result<()> {
    use chanelim::cli::config::Mode;
    use chanelim::cli::experiment::{run_selector, Instance};

    let inst = match cfg.mode {
        Mode::FromFiles => load_instance(cfg)?,
        Mode::Synthetic => {
            let s = chanelim::sim::generate_instance(&cfg.spec.with_seed(cfg.seed_start))?;
            Instance {
                q_obs: s.q_obs,
                k: s.k,
                q_future: Some(s.q_future),
            }
        }
    };
    let (lambda, selector) = (cfg.lambdas[0], cfg.selectors[0]);
    let protect = cfg.protection.flags().last().copied().unwrap_or(true);
    let protected = protect_channels(&inst.k, &cfg.policy_for(protect));
    let g = build_interaction_graph(&inst.q_obs, &inst.k)?;
    let sel = run_selector(selector, &g, &inst, lambda, &protected, cfg.seed_start, cfg.oracle_cap)?;
    let mut text = format!(
        "selector = {selector}\nlambda = {lambda}\nn_prune = {}\nclamped = {}\nprotected = {}\npruned = {}\n\
         error_sq = {}\nrelative_error = {}\n",
        sel.n_prune,
        sel.clamped,
        join(&protected.sorted()),
        join(&sel.pruned.sorted()),
        sel.error_sq,
        relative_error(&inst.q_obs, &inst.k, &sel.pruned)?,
    );
    if let Some(qf) = &inst.q_future {
        text.push_str(&format!("error_future = {}\n", relative_error(qf, &inst.k, &sel.pruned)?));
    }
    write_output(cfg.output.as_deref(), &text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate => generate(&cli.opts.resolve()?),
        Command::Prune => prune(&cli.opts.resolve()?),
        Command::Sweep => {
            let cfg = cli.opts.resolve()?;
            let report = run_experiment(&cfg)?;
            write_output(cfg.output.as_deref(), &report.to_csv(&cfg))
        }
        Command::Verify {
            instances,
            inject_corruption,
        } => {
            let opts = VerifyOptions {
                seed: cli.opts.seed.unwrap_or(0),
                instances,
            };
            let summary = if inject_corruption {
                verify_with(&opts, asymmetric_builder)?
            } else {
                verify(&opts)?
            };
            print!("{summary}");
            summary.into_result().map(|_| ())
        }
        Command::Replay { report, tolerance } => {
            let text = fs::read_to_string(&report).map_err(|source| Error::Io {
                path: report.clone(),
                source,
            })?;
            let (cfg, rows) = parse_report(&text)?;
            let summary = replay(&cfg, &rows, tolerance)?;
            println!(
                "replayed {} rows ({} skipped), {} mismatches",
                summary.checked,
                summary.skipped,
                summary.mismatches.len()
            );
            match summary.mismatches.first() {
                None => Ok(()),
                Some(m) => {
                    let r = &rows.rows[m.row];
                    Err(Error::Invariant {
                        suite: "replay".into(),
                        seed: r.seed,
                        subset: Vec::new(),
                        detail: format!(
                            "row {} ({} at lambda {}): recorded {}, recomputed {}",
                            m.row + 1,
                            r.selector,
                            r.lambda,
                            m.recorded,
                            m.recomputed
                        ),
                    })
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
