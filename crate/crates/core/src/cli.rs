//! `mubsearch` command line: `search`, `verify`, `construct`, `hist`.
//!
//! Exit codes: 0 on completion (a search that finds nothing still exits 0),
//! 1 when `verify` finds the input is not a MUB set, 2 for invalid flags or
//! malformed input, 3 for I/O failures.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::io::{
    parse_seed, read_trials_csv, write_histogram_text, write_trials_csv, SummaryRecord,
};
use crate::lm::LmOptions;
use crate::objective::{is_mub_set, prime_mub_construction, BasisSet, BasisSetJson};
use crate::search::{histogram, run_search_with, SearchConfig, DEFAULT_BIN_WIDTH};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_MUB: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Largest unitarity defect `verify` accepts before calling the input
/// malformed.
pub const VERIFY_UNITARY_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "mubsearch",
    version,
    about = "Numerical search for mutually unbiased bases"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multi-start Levenberg-Marquardt search for N+1 MUBs in dimension d.
    Search(SearchArgs),
    /// Check whether a basis-set JSON file is a set of MUBs.
    Verify(VerifyArgs),
    /// Write the d+1 MUBs of a prime dimension as basis-set JSON.
    Construct(ConstructArgs),
    /// Bin the final objectives of a trials CSV.
    Hist(HistArgs),
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Dimension d.
    #[arg(long = "dim")]
    pub dim: usize,
    /// Number of free bases N (the standard basis makes N+1).
    #[arg(long = "bases")]
    pub bases: usize,
    #[arg(long)]
    pub trials: usize,
    /// Base seed, decimal or 0x-prefixed hex.
    #[arg(long, value_parser = parse_seed_arg)]
    pub seed: u64,
    #[arg(long = "success-tol", default_value_t = 1e-6)]
    pub success_tol: f64,
    /// Stop when an accepted step changes the objective by less than this.
    #[arg(long = "term-tol", default_value_t = 1e-8)]
    pub term_tol: f64,
    #[arg(long = "max-iter", default_value_t = 400)]
    pub max_iter: usize,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long = "bin-width", default_value_t = DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
    /// Output prefix; writes PREFIX.trials.csv and PREFIX.summary.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Suppress per-trial progress on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "success-tol", default_value_t = 1e-6)]
    pub success_tol: f64,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// Prime dimension.
    #[arg(long = "dim")]
    pub dim: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HistArgs {
    /// A PREFIX.trials.csv written by `search`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "bin-width", default_value_t = DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_seed_arg(s: &str) -> Result<u64, String> {
    parse_seed(s).ok_or_else(|| format!("invalid seed {s:?}"))
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.command {
        Command::Search(a) => cmd_search(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Construct(a) => cmd_construct(&a),
        Command::Hist(a) => cmd_hist(&a),
    }
}

fn usage_error(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn io_error(path: &Path, msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {}: {msg}", path.display());
    EXIT_IO
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn cmd_search(a: &SearchArgs) -> i32 {
    let config = SearchConfig {
        d: a.dim,
        n_bases: a.bases,
        trials: a.trials,
        base_seed: a.seed,
        success_threshold: a.success_tol,
        lm_options: LmOptions {
            func_change_tol: a.term_tol,
            max_iterations: a.max_iter,
            ..LmOptions::default()
        },
        parallelism: a.jobs,
        bin_width: a.bin_width,
    };
    if let Err(e) = config.validate() {
        return usage_error(e);
    }

    let done = std::sync::atomic::AtomicUsize::new(0);
    let report = run_search_with(&config, |t| {
        let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        if !a.quiet {
            eprintln!(
                "[{n}/{}] trial {} objective {:.9e} ({}, {} iterations)",
                config.trials,
                t.trial_id,
                t.objective_final,
                t.termination.as_str(),
                t.iterations
            );
        }
    });
    let report = match report {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };

    let csv_path = with_suffix(&a.out, ".trials.csv");
    let written = File::create(&csv_path)
        .map_err(|e| e.to_string())
        .and_then(|f| write_trials_csv(BufWriter::new(f), &report).map_err(|e| e.to_string()));
    if let Err(e) = written {
        return io_error(&csv_path, e);
    }
    let json_path = with_suffix(&a.out, ".summary.json");
    let summary = SummaryRecord::from_report(&report);
    let text = summary.to_json_pretty().expect("summary serializes");
    if let Err(e) = std::fs::write(&json_path, text) {
        return io_error(&json_path, e);
    }

    println!(
        "d={} N={} ({} bases): {}/{} trials reached objective <= {:e} ({:.1}%)",
        config.d,
        config.n_bases,
        config.n_bases + 1,
        report.success_count,
        config.trials,
        config.success_threshold,
        100.0 * report.success_rate
    );
    println!("minimum objective: {:.9}", report.min_objective);
    if let Some(b) = report.modal_bin {
        println!(
            "modal bin: [{:.4}, {:.4}) with {} trials ({:.1}%)",
            b.lower,
            b.upper,
            b.count,
            100.0 * report.modal_fraction
        );
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    EXIT_OK
}

pub fn cmd_verify(a: &VerifyArgs) -> i32 {
    if !(a.success_tol > 0.0) {
        return usage_error("--success-tol must be positive");
    }
    let text = match std::fs::read_to_string(&a.input) {
        Ok(t) => t,
        Err(e) => return usage_error(format_args!("{}: {e}", a.input.display())),
    };
    let parsed: BasisSetJson = match serde_json::from_str(&text) {
        Ok(p) => p,
        Err(e) => {
            return usage_error(format_args!(
                "{}: malformed basis set: {e}",
                a.input.display()
            ))
        }
    };
    let matrices = match parsed.to_matrices() {
        Ok(m) => m,
        Err(e) => return usage_error(e),
    };
    let defect = matrices
        .iter()
        .map(|u| u.unitarity_defect())
        .fold(0.0, f64::max);
    println!("worst unitarity defect: {defect:.3e}");
    let set = match BasisSet::with_tolerance(parsed.d, matrices, VERIFY_UNITARY_TOL) {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    let check = is_mub_set(&set, a.success_tol);
    println!(
        "d = {}, bases = {} (+ standard basis)",
        set.dim(),
        set.n_bases()
    );
    println!("objective: {:.17e}", check.objective);
    println!(
        "worst deviation from 1/sqrt(d): {:.3e}",
        check.worst_deviation
    );
    if check.is_mub {
        println!("mutually unbiased within {:e}", a.success_tol);
        EXIT_OK
    } else {
        println!("NOT mutually unbiased within {:e}", a.success_tol);
        EXIT_NOT_MUB
    }
}

pub fn cmd_construct(a: &ConstructArgs) -> i32 {
    let set = match prime_mub_construction(a.dim) {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    if let Err(e) = set.save(&a.out) {
        return io_error(&a.out, e);
    }
    println!(
        "wrote {} bases for d = {} ({} MUBs with the standard basis) to {}",
        set.n_bases(),
        a.dim,
        set.n_bases() + 1,
        a.out.display()
    );
    EXIT_OK
}

pub fn cmd_hist(a: &HistArgs) -> i32 {
    let file = match File::open(&a.input) {
        Ok(f) => f,
        Err(e) => return usage_error(format_args!("{}: {e}", a.input.display())),
    };
    let rows = match read_trials_csv(file) {
        Ok(r) => r,
        Err(e) => return usage_error(format_args!("{}: {e}", a.input.display())),
    };
    let minima: Vec<f64> = rows.iter().filter_map(|r| r.objective()).collect();
    let bins = match histogram(&minima, a.bin_width, 0.0) {
        Ok(b) => b,
        Err(e) => return usage_error(e),
    };
    let written = File::create(&a.out).and_then(|f| {
        let mut w = BufWriter::new(f);
        write_histogram_text(&mut w, &bins)?;
        w.flush()
    });
    if let Err(e) = written {
        return io_error(&a.out, e);
    }
    EXIT_OK
}
