//! On-disk formats: per-trial CSV, summary JSON and two-column histogram
//! text.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::search::{HistogramBin, SearchConfig, SearchReport, TrialResult, TrialTermination};

pub const SCHEMA_VERSION: u32 = 1;

/// How per-trial seeds derive from the base seed, echoed into summaries.
pub const SEED_RULE: &str =
    "seed_i = base_seed XOR (0x9E3779B97F4A7C15 * (i + 1)) mod 2^64, i = trial_id";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: {msg}")]
    Invalid { row: usize, msg: String },
}

/// One CSV row per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial_id: usize,
    /// `0x`-prefixed, 16 hex digits.
    pub seed: String,
    pub d: usize,
    pub n_bases: usize,
    /// 17 significant digits.
    pub objective_final: String,
    pub iterations: usize,
    pub termination: String,
    pub success: u8,
    pub wall_time_ms: u64,
}

pub fn format_objective(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn format_seed(seed: u64) -> String {
    format!("0x{seed:016x}")
}

pub fn parse_seed(s: &str) -> Option<u64> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

impl ResultRow {
    pub fn from_trial(t: &TrialResult, d: usize, n_bases: usize) -> Self {
        Self {
            trial_id: t.trial_id,
            seed: format_seed(t.seed),
            d,
            n_bases,
            objective_final: format_objective(t.objective_final),
            iterations: t.iterations,
            termination: t.termination.as_str().to_string(),
            success: u8::from(t.success),
            wall_time_ms: t.wall_time_ms,
        }
    }

    pub fn objective(&self) -> Option<f64> {
        self.objective_final.trim().parse().ok()
    }

    pub fn to_trial(&self) -> Option<TrialResult> {
        Some(TrialResult {
            trial_id: self.trial_id,
            seed: parse_seed(&self.seed)?,
            objective_final: self.objective()?,
            iterations: self.iterations,
            termination: TrialTermination::parse(&self.termination)?,
            wall_time_ms: self.wall_time_ms,
            success: match self.success {
                0 => false,
                1 => true,
                _ => return None,
            },
        })
    }
}

pub fn write_trials_csv<W: Write>(out: W, report: &SearchReport) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    let (d, n) = (report.config.d, report.config.n_bases);
    if report.trials.is_empty() {
        w.write_record([
            "trial_id",
            "seed",
            "d",
            "n_bases",
            "objective_final",
            "iterations",
            "termination",
            "success",
            "wall_time_ms",
        ])?;
    }
    for t in &report.trials {
        w.serialize(ResultRow::from_trial(t, d, n))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trials CSV. The header row is mandatory.
pub fn read_trials_csv<R: Read>(input: R) -> Result<Vec<ResultRow>, FormatError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = r.headers()?.clone();
    for required in ["trial_id", "objective_final"] {
        if !headers.iter().any(|h| h == required) {
            return Err(FormatError::Invalid {
                row: 0,
                msg: format!("missing column {required}"),
            });
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        let row: ResultRow = rec?;
        if row.objective().is_none() {
            return Err(FormatError::Invalid {
                row: i + 1,
                msg: format!("bad objective_final {:?}", row.objective_final),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Every search flag, echoed into the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dim: usize,
    pub bases: usize,
    pub trials: usize,
    pub seed: String,
    pub success_tol: f64,
    pub term_tol: f64,
    pub max_iter: usize,
    pub jobs: usize,
    pub bin_width: f64,
    pub fd_step: f64,
    pub damping_init: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    pub damping_max: f64,
    pub damping_scale: String,
}

impl From<&SearchConfig> for ConfigEcho {
    fn from(c: &SearchConfig) -> Self {
        let o = &c.lm_options;
        Self {
            dim: c.d,
            bases: c.n_bases,
            trials: c.trials,
            seed: format_seed(c.base_seed),
            success_tol: c.success_threshold,
            term_tol: o.func_change_tol,
            max_iter: o.max_iterations,
            jobs: c.parallelism,
            bin_width: c.bin_width,
            fd_step: o.fd_step,
            damping_init: o.damping_init,
            damping_up: o.damping_up,
            damping_down: o.damping_down,
            damping_max: o.damping_max,
            damping_scale: format!("{:?}", o.damping_scale),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub generator_id: String,
    pub seed_rule: String,
    pub trials: usize,
    pub success_count: usize,
    pub success_rate: f64,
    /// `null` when no trial produced a finite objective.
    pub min_objective: Option<f64>,
    pub modal_bin: Option<HistogramBin>,
    pub modal_fraction: f64,
    pub histogram: Vec<HistogramBin>,
}

impl SummaryRecord {
    pub fn from_report(report: &SearchReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config: ConfigEcho::from(&report.config),
            generator_id: crate::sampler::GENERATOR_ID.to_string(),
            seed_rule: SEED_RULE.to_string(),
            trials: report.trials.len(),
            success_count: report.success_count,
            success_rate: report.success_rate,
            min_objective: report
                .min_objective
                .is_finite()
                .then_some(report.min_objective),
            modal_bin: report.modal_bin,
            modal_fraction: report.modal_fraction,
            histogram: report.histogram.clone(),
        }
    }

    pub fn to_json_pretty(&self) -> Result<String, FormatError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// `bin_center count` per line, no header.
pub fn write_histogram_text<W: Write>(mut out: W, bins: &[HistogramBin]) -> std::io::Result<()> {
    for b in bins {
        writeln!(out, "{} {}", format_center(b.center()), b.count)?;
    }
    Ok(())
}

fn format_center(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}
