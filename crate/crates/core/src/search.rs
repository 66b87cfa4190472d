//! Multi-start driver: sample Haar starting points, minimize, classify and
//! aggregate.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MubError, Result};
use crate::lm::{lm_minimize, LeastSquaresProblem, LmOptions, Termination};
use crate::objective::DEFAULT_SUCCESS_THRESHOLD;
use crate::param::ParamVector;
use crate::problem::MubProblem;
use crate::sampler::{haar_unitary, trial_seed, MubRng};

pub const DEFAULT_BIN_WIDTH: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub d: usize,
    /// Free unitaries `N`; the search looks for `N + 1` bases.
    pub n_bases: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub success_threshold: f64,
    pub lm_options: LmOptions,
    pub parallelism: usize,
    pub bin_width: f64,
}

impl SearchConfig {
    pub fn new(d: usize, n_bases: usize, trials: usize, base_seed: u64) -> Self {
        Self {
            d,
            n_bases,
            trials,
            base_seed,
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
            lm_options: LmOptions::default(),
            parallelism: 1,
            bin_width: DEFAULT_BIN_WIDTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(MubError::InvalidConfig(
                "dimension must be at least 2".into(),
            ));
        }
        if self.n_bases < 1 {
            return Err(MubError::InvalidConfig(
                "need at least one free basis".into(),
            ));
        }
        if self.trials < 1 {
            return Err(MubError::InvalidConfig("need at least one trial".into()));
        }
        if !(self.success_threshold > 0.0) {
            return Err(MubError::InvalidConfig(
                "success threshold must be positive".into(),
            ));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(MubError::InvalidConfig("bin width must be positive".into()));
        }
        if self.parallelism < 1 {
            return Err(MubError::InvalidConfig(
                "parallelism must be at least 1".into(),
            ));
        }
        self.lm_options.validate()
    }

    pub fn trial_seed(&self, trial_id: usize) -> u64 {
        trial_seed(self.base_seed, trial_id as u64)
    }
}

/// How a trial ended: a solver stop, or a numerical failure that prevented
/// the solver from running to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrialTermination {
    Solver(Termination),
    NumericalError,
}

impl TrialTermination {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialTermination::Solver(t) => t.as_str(),
            TrialTermination::NumericalError => "NumericalError",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "FunctionChangeTol" => Self::Solver(Termination::FunctionChangeTol),
            "MaxIterations" => Self::Solver(Termination::MaxIterations),
            "DampingOverflow" => Self::Solver(Termination::DampingOverflow),
            "GradientVanished" => Self::Solver(Termination::GradientVanished),
            "NumericalError" => Self::NumericalError,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_id: usize,
    pub seed: u64,
    pub objective_final: f64,
    pub iterations: usize,
    pub termination: TrialTermination,
    pub wall_time_ms: u64,
    pub success: bool,
}

impl TrialResult {
    /// Equality on everything except wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.trial_id == other.trial_id
            && self.seed == other.seed
            && self.objective_final.to_bits() == other.objective_final.to_bits()
            && self.iterations == other.iterations
            && self.termination == other.termination
            && self.success == other.success
    }
}

/// Haar-random starting point for a trial: `N` sampled unitaries mapped to
/// their principal-logarithm generators.
pub fn starting_point(d: usize, n_bases: usize, seed: u64) -> Result<ParamVector> {
    let mut rng = MubRng::new(seed);
    let unitaries = (0..n_bases)
        .map(|_| haar_unitary(d, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    ParamVector::from_unitaries(d, &unitaries)
}

/// Outcome of one trial together with its final parameters, when the solver
/// produced any.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub result: TrialResult,
    pub x_final: Option<ParamVector>,
}

pub fn run_trial_detailed(config: &SearchConfig, trial_id: usize) -> TrialOutcome {
    let start = Instant::now();
    let seed = config.trial_seed(trial_id);
    let solved = MubProblem::new(config.d, config.n_bases).and_then(|problem| {
        let x0 = starting_point(config.d, config.n_bases, seed)?;
        let r = lm_minimize(&problem, x0.values(), &config.lm_options);
        match r {
            Ok(r) => Ok(Ok(r)),
            // Keep the starting objective so the trial still has a value.
            Err(_) => {
                let mut f = vec![0.0; problem.num_residuals()];
                problem.residuals(x0.values(), &mut f)?;
                Ok(Err(f.iter().map(|v| v * v).sum::<f64>()))
            }
        }
    });
    let wall_time_ms = start.elapsed().as_millis() as u64;
    let (objective_final, iterations, termination, x_final) = match solved {
        Ok(Ok(r)) => (
            r.objective_final,
            r.iterations,
            TrialTermination::Solver(r.termination),
            ParamVector::new(config.d, config.n_bases, r.x_final).ok(),
        ),
        Ok(Err(start_objective)) => (start_objective, 0, TrialTermination::NumericalError, None),
        Err(_) => (f64::NAN, 0, TrialTermination::NumericalError, None),
    };
    TrialOutcome {
        result: TrialResult {
            trial_id,
            seed,
            objective_final,
            iterations,
            termination,
            wall_time_ms,
            success: objective_final <= config.success_threshold,
        },
        x_final,
    }
}

/// Runs trial `trial_id`. Numerical failures are recorded, never raised.
pub fn run_trial(config: &SearchConfig, trial_id: usize) -> TrialResult {
    run_trial_detailed(config, trial_id).result
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

impl HistogramBin {
    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Half-open bins `[origin + i·w, origin + (i+1)·w)` covering every finite
/// input, contiguous from the lowest to the highest occupied bin. Non-finite
/// inputs are skipped.
pub fn histogram(minima: &[f64], bin_width: f64, origin: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(MubError::InvalidConfig("bin width must be positive".into()));
    }
    let edge = |i: i64| origin + i as f64 * bin_width;
    let index = |x: f64| -> i64 {
        let mut i = ((x - origin) / bin_width).floor() as i64;
        // Keep the index consistent with the edges as computed above.
        while x < edge(i) {
            i -= 1;
        }
        while x >= edge(i + 1) {
            i += 1;
        }
        i
    };
    let indices: Vec<i64> = minima
        .iter()
        .filter(|x| x.is_finite())
        .map(|&x| index(x))
        .collect();
    let (Some(&lo), Some(&hi)) = (indices.iter().min(), indices.iter().max()) else {
        return Ok(Vec::new());
    };
    let mut bins: Vec<HistogramBin> = (lo..=hi)
        .map(|i| HistogramBin {
            lower: edge(i),
            upper: edge(i + 1),
            count: 0,
        })
        .collect();
    for i in indices {
        bins[(i - lo) as usize].count += 1;
    }
    Ok(bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub config: SearchConfig,
    pub trials: Vec<TrialResult>,
    pub success_count: usize,
    pub success_rate: f64,
    pub min_objective: f64,
    pub histogram: Vec<HistogramBin>,
    pub modal_bin: Option<HistogramBin>,
    pub modal_fraction: f64,
}

impl SearchReport {
    /// Aggregates trial results; the result does not depend on their order.
    pub fn aggregate(config: SearchConfig, mut trials: Vec<TrialResult>) -> Result<Self> {
        trials.sort_by_key(|t| t.trial_id);
        let success_count = trials.iter().filter(|t| t.success).count();
        let n = trials.len().max(1) as f64;
        let min_objective = trials
            .iter()
            .map(|t| t.objective_final)
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min);
        let minima: Vec<f64> = trials.iter().map(|t| t.objective_final).collect();
        let histogram = histogram(&minima, config.bin_width, 0.0)?;
        let modal_bin =
            histogram
                .iter()
                .copied()
                .reduce(|best, b| if b.count > best.count { b } else { best });
        let modal_fraction = modal_bin.map_or(0.0, |b| b.count as f64 / n);
        Ok(Self {
            config,
            success_count,
            success_rate: success_count as f64 / n,
            min_objective,
            histogram,
            modal_bin,
            modal_fraction,
            trials,
        })
    }

    /// Fraction of trials whose final objective lies within `tol` of `value`.
    pub fn fraction_near(&self, value: f64, tol: f64) -> f64 {
        let hits = self
            .trials
            .iter()
            .filter(|t| (t.objective_final - value).abs() <= tol)
            .count();
        hits as f64 / self.trials.len().max(1) as f64
    }

    /// Count in the bin `[lower, lower + bin_width)`, if present.
    pub fn bin_count(&self, lower: f64) -> usize {
        let w = self.config.bin_width;
        self.histogram
            .iter()
            .find(|b| (b.lower - lower).abs() < 1e-9 * w.max(1.0))
            .map_or(0, |b| b.count)
    }
}

/// Runs `config.trials` independent trials on up to `config.parallelism`
/// worker threads and aggregates them.
pub fn run_search(config: &SearchConfig) -> Result<SearchReport> {
    run_search_with(config, |_| {})
}

/// Like [`run_search`], calling `on_trial` as each trial finishes (in
/// completion order).
pub fn run_search_with(
    config: &SearchConfig,
    on_trial: impl Fn(&TrialResult) + Sync,
) -> Result<SearchReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| MubError::InvalidConfig(format!("cannot build worker pool: {e}")))?;
    let trials: Vec<TrialResult> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|i| {
                let r = run_trial(config, i);
                on_trial(&r);
                r
            })
            .collect()
    });
    SearchReport::aggregate(*config, trials)
}
