//! CSV experiment reports.

use std::fmt::Write as _;

use crate::cli::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::prune::Selector;

pub const CSV_HEADER: &str = "instance,seed,selector,lambda,protect,n_prune,n_protected,\
error_sq,relative_error,error_future,approx_ratio,wall_time_ms";

pub const ORACLE_SKIPPED: &str = "oracle_skipped";
pub const ZERO_OPTIMUM: &str = "zero_optimum";

/// `error_sq / f(S*)` when the exhaustive optimum was computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApproxRatio {
    NotRequested,
    Value(f64),
    /// `f(S*) == 0`; the ratio is undefined.
    ZeroOptimum,
    /// The enumeration cap was exceeded.
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub instance: u64,
    pub seed: u64,
    pub selector: Selector,
    pub lambda: f64,
    pub protect: bool,
    pub n_prune: usize,
    pub n_protected: usize,
    /// `None` only for ORACLE rows whose enumeration was skipped.
    pub error_sq: Option<f64>,
    pub relative_error: Option<f64>,
    pub error_future: Option<f64>,
    pub approx_ratio: ApproxRatio,
    pub wall_time_ms: Option<f64>,
}

impl ReportRow {
    pub fn sort_key(&self) -> (u64, u64, Selector, bool) {
        (self.seed, self.lambda.to_bits(), self.selector, self.protect)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

/// Formats `x` with 12 significant digits, trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let s = format!("{:.*e}", (DIGITS - 1) as usize, x);
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        format!("{}e{e}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

impl ExperimentReport {
    pub fn sort(&mut self) {
        self.rows.sort_by_key(ReportRow::sort_key);
    }

    /// Renders the report: resolved config as `#` comment lines, the header, one line per row.
    pub fn to_csv(&self, cfg: &ExperimentConfig) -> String {
        let mut out = String::from("# chanelim sweep report\n");
        for line in cfg.to_lines() {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let ratio = match r.approx_ratio {
                ApproxRatio::NotRequested => String::new(),
                ApproxRatio::Value(v) => fmt_sig(v),
                ApproxRatio::ZeroOptimum => ZERO_OPTIMUM.into(),
                ApproxRatio::Skipped => ORACLE_SKIPPED.into(),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.instance,
                r.seed,
                r.selector,
                fmt_sig(r.lambda),
                r.protect,
                r.n_prune,
                r.n_protected,
                opt(r.error_sq),
                opt(r.relative_error),
                opt(r.error_future),
                ratio,
                opt(r.wall_time_ms),
            );
        }
        out
    }
}

/// Splits a rendered report back into its embedded config and rows.
pub fn parse_report(text: &str) -> Result<(ExperimentConfig, ExperimentReport)> {
    let mut config_text = String::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (n, line) in text.lines().enumerate() {
        let bad = |msg: &str| Error::Config(format!("report line {}: {msg}", n + 1));
        if let Some(comment) = line.strip_prefix('#') {
            let c = comment.trim();
            if c.contains('=') {
                config_text.push_str(c);
                config_text.push('\n');
            }
            continue;
        }
        if !seen_header {
            if line.trim() != CSV_HEADER {
                return Err(bad("missing or unexpected header row"));
            }
            seen_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(bad("expected 12 fields"));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(&format!("bad number `{s}`")))
            }
        };
        let int = |s: &str| s.parse::<u64>().map_err(|_| bad(&format!("bad integer `{s}`")));
        rows.push(ReportRow {
            instance: int(f[0])?,
            seed: int(f[1])?,
            selector: f[2].parse()?,
            lambda: num(f[3])?.ok_or_else(|| bad("missing lambda"))?,
            protect: f[4].parse().map_err(|_| bad("bad protect flag"))?,
            n_prune: int(f[5])? as usize,
            n_protected: int(f[6])? as usize,
            error_sq: num(f[7])?,
            relative_error: num(f[8])?,
            error_future: num(f[9])?,
            approx_ratio: match f[10] {
                "" => ApproxRatio::NotRequested,
                ORACLE_SKIPPED => ApproxRatio::Skipped,
                ZERO_OPTIMUM => ApproxRatio::ZeroOptimum,
                s => ApproxRatio::Value(num(s)?.unwrap_or_default()),
            },
            wall_time_ms: num(f[11])?,
        });
    }
    if !seen_header {
        return Err(Error::Config("report has no header row".into()));
    }
    Ok((ExperimentConfig::parse(&config_text)?, ExperimentReport { rows }))
}
