//! Experiment configuration: a flat `key = value` text format plus overrides.
//!
//! [`ExperimentConfig::to_lines`] renders every key in a fixed order and
//! [`ExperimentConfig::parse`] accepts that rendering back, so a report that
//! embeds its resolved config can be replayed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::prune::{ProtectionPolicy, Selector};
use crate::sim::SyntheticSpec;
use crate::subsets::DEFAULT_ENUMERATION_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Synthetic,
    FromFiles,
}

/// Which protection settings a sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protection {
    On,
    Off,
    Both,
}

impl Protection {
    pub fn flags(self) -> &'static [bool] {
        match self {
            Protection::On => &[true],
            Protection::Off => &[false],
            Protection::Both => &[false, true],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub spec: SyntheticSpec,
    pub q_path: Option<PathBuf>,
    pub k_path: Option<PathBuf>,
    pub q_future_path: Option<PathBuf>,
    pub lambdas: Vec<f64>,
    pub selectors: Vec<Selector>,
    pub policy: ProtectionPolicy,
    pub protection: Protection,
    /// First seed of the sweep; overrides `SyntheticSpec::seed`.
    pub seed_start: u64,
    pub seed_count: u64,
    pub oracle: bool,
    pub oracle_cap: u128,
    /// Record wall-clock time per row. Off by default so reports are reproducible byte for byte.
    pub timing: bool,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Synthetic,
            spec: SyntheticSpec::default(),
            q_path: None,
            k_path: None,
            q_future_path: None,
            lambdas: vec![0.5, 0.6],
            selectors: vec![Selector::Mies, Selector::Think],
            policy: ProtectionPolicy::default(),
            protection: Protection::On,
            seed_start: 0,
            seed_count: 1,
            oracle: false,
            oracle_cap: DEFAULT_ENUMERATION_CAP,
            timing: false,
            output: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{v}`"))),
    }
}

pub fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

pub fn parse_selectors(v: &str) -> Result<Vec<Selector>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

pub fn parse_bounds(v: &str) -> Result<(f64, f64)> {
    match parse_list::<f64>("protect_bounds", v)?.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err(Error::Config(format!("`protect_bounds`: expected `A,B`, got `{v}`"))),
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let spec = &mut self.spec;
        match key {
            "mode" => {
                self.mode = match v {
                    "synthetic" => Mode::Synthetic,
                    "from-files" | "files" => Mode::FromFiles,
                    _ => return Err(Error::Config(format!("`mode`: unknown mode `{v}`"))),
                }
            }
            "channels" => spec.channels = parse_num(key, v)?,
            "key_tokens" => spec.key_tokens = parse_num(key, v)?,
            "obs_tokens" => spec.obs_tokens = parse_num(key, v)?,
            "future_tokens" => spec.future_tokens = parse_num(key, v)?,
            "outlier_fraction" => spec.outlier_fraction = parse_num(key, v)?,
            "outlier_scale" => spec.outlier_scale = parse_num(key, v)?,
            "drift_gamma" => spec.drift_gamma = parse_num(key, v)?,
            "scale_log_mean" => spec.scale_log_mean = parse_num(key, v)?,
            "scale_log_std" => spec.scale_log_std = parse_num(key, v)?,
            "q_path" => self.q_path = Some(v.into()),
            "k_path" => self.k_path = Some(v.into()),
            "q_future_path" => self.q_future_path = (!v.is_empty()).then(|| v.into()),
            "lambdas" => self.lambdas = parse_list(key, v)?,
            "selectors" => self.selectors = parse_selectors(v)?,
            "protect" => {
                self.protection = match v.to_ascii_lowercase().as_str() {
                    "both" => Protection::Both,
                    other => {
                        if parse_bool(key, other)? {
                            Protection::On
                        } else {
                            Protection::Off
                        }
                    }
                }
            }
            "protect_sigma" => {
                let (a, b) = self.policy.bounds();
                self.policy = ProtectionPolicy::new(parse_num(key, v)?, a, b)?;
            }
            "protect_bounds" => {
                let (a, b) = parse_bounds(v)?;
                self.policy = ProtectionPolicy::new(self.policy.threshold_sigma(), a, b)?;
            }
            "seed" => self.seed_start = parse_num(key, v)?,
            "seeds" => self.seed_count = parse_num(key, v)?,
            "oracle" => self.oracle = parse_bool(key, v)?,
            "oracle_cap" => self.oracle_cap = parse_num(key, v)?,
            "timing" => self.timing = parse_bool(key, v)?,
            "out" => self.output = (!v.is_empty()).then(|| v.into()),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::Config("at least one pruning ratio is required".into()));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::Config(format!("pruning ratio {l} outside [0, 1]")));
        }
        if self.selectors.is_empty() {
            return Err(Error::Config("at least one selector is required".into()));
        }
        if self.seed_count == 0 {
            return Err(Error::Config("`seeds` must be >= 1".into()));
        }
        match self.mode {
            Mode::Synthetic => self.spec.validate(),
            Mode::FromFiles if self.q_path.is_none() || self.k_path.is_none() => Err(Error::Config(
                "file mode requires both q_path and k_path".into(),
            )),
            Mode::FromFiles => Ok(()),
        }
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> {
        self.seed_start..self.seed_start.saturating_add(self.seed_count)
    }

    pub fn policy_for(&self, protect: bool) -> ProtectionPolicy {
        self.policy.with_enabled(protect)
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn to_lines(&self) -> Vec<String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let join = |xs: Vec<String>| xs.join(",");
        let s = &self.spec;
        let (a, b) = self.policy.bounds();
        let mut lines = vec![
            format!(
                "mode = {}",
                match self.mode {
                    Mode::Synthetic => "synthetic",
                    Mode::FromFiles => "from-files",
                }
            ),
            format!("channels = {}", s.channels),
            format!("key_tokens = {}", s.key_tokens),
            format!("obs_tokens = {}", s.obs_tokens),
            format!("future_tokens = {}", s.future_tokens),
            format!("outlier_fraction = {}", s.outlier_fraction),
            format!("outlier_scale = {}", s.outlier_scale),
            format!("drift_gamma = {}", s.drift_gamma),
            format!("scale_log_mean = {}", s.scale_log_mean),
            format!("scale_log_std = {}", s.scale_log_std),
        ];
        if self.mode == Mode::FromFiles {
            lines.push(format!("q_path = {}", path(&self.q_path)));
            lines.push(format!("k_path = {}", path(&self.k_path)));
            lines.push(format!("q_future_path = {}", path(&self.q_future_path)));
        }
        lines.extend([
            format!("lambdas = {}", join(self.lambdas.iter().map(f64::to_string).collect())),
            format!(
                "selectors = {}",
                join(self.selectors.iter().map(|s| s.name().to_string()).collect())
            ),
            format!(
                "protect = {}",
                match self.protection {
                    Protection::On => "true",
                    Protection::Off => "false",
                    Protection::Both => "both",
                }
            ),
            format!("protect_sigma = {}", self.policy.threshold_sigma()),
            format!("protect_bounds = {a},{b}"),
            format!("seed = {}", self.seed_start),
            format!("seeds = {}", self.seed_count),
            format!("oracle = {}", self.oracle),
            format!("oracle_cap = {}", self.oracle_cap),
            format!("timing = {}", self.timing),
        ]);
        lines
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in self.to_lines() {
            let _ = writeln!(out, "{l}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_keys_and_comments() {
        let cfg = ExperimentConfig::parse(
            "# sweep\nchannels = 32\nlambdas = 0.25, 0.5\nselectors = mies,oracle\nprotect = both\n\
             protect_bounds = 0.05,0.2\nseed = 7\nseeds = 3\noracle = true\n",
        )
        .unwrap();
        assert_eq!(cfg.spec.channels, 32);
        assert_eq!(cfg.lambdas, vec![0.25, 0.5]);
        assert_eq!(cfg.selectors, vec![Selector::Mies, Selector::Oracle]);
        assert_eq!(cfg.protection, Protection::Both);
        assert_eq!(cfg.policy.bounds(), (0.05, 0.2));
        assert_eq!(cfg.seeds().collect::<Vec<_>>(), vec![7, 8, 9]);
        assert!(cfg.oracle);
    }

    #[test]
    fn rendering_round_trips() {
        let mut cfg = ExperimentConfig {
            lambdas: vec![0.1, 1.0 / 3.0],
            protection: Protection::Both,
            ..ExperimentConfig::default()
        };
        cfg.spec.drift_gamma = 0.123456789;
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);

        let files = ExperimentConfig {
            mode: Mode::FromFiles,
            q_path: Some("q.grcm".into()),
            k_path: Some("k.csv".into()),
            ..ExperimentConfig::default()
        };
        assert_eq!(ExperimentConfig::parse(&files.to_text()).unwrap(), files);
    }

    #[test]
    fn rejects_invalid() {
        for bad in [
            "lambdas = 1.5",
            "selectors = greedy",
            "frobnicate = 1",
            "mode = files",
            "protect_bounds = 0.3,0.1",
            "seeds = 0",
            "just a line",
            "oracle = maybe",
        ] {
            assert!(
                matches!(ExperimentConfig::parse(bad), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }
}
