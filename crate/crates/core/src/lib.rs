//! Numerical search for mutually unbiased bases.
//!
//! A set of `N` unitaries plus the standard basis is scored by the sum over
//! all basis pairs and all entries of `(|(U_k†U_l)_{mn}|² − 1/d)²`, which
//! vanishes exactly when the `N + 1` bases are mutually unbiased. Each
//! unitary is written as `e^{iH}` with `H` Hermitian, so the score becomes
//! an unconstrained nonlinear least-squares problem in `d²·N` reals. The
//! [`search`] module runs Levenberg–Marquardt from many Haar-random starting
//! points and aggregates the minima it reaches.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod io;
pub mod lm;
pub mod matrix;
pub mod objective;
pub mod param;
pub mod problem;
pub mod sampler;
pub mod search;

pub use error::{MubError, Result};
pub use lm::{fd_jacobian, lm_minimize, LeastSquaresProblem, LmOptions, LmResult, Termination};
pub use matrix::{Complex, ComplexMatrix, HermitianEig};
pub use objective::{
    gram_moduli_sq, is_mub_set, objective_value, prime_mub_construction, residuals, BasisSet,
    MubCheck,
};
pub use param::{exp_i, hermitian_to_params, log_unitary, params_to_hermitian, ParamVector};
pub use problem::MubProblem;
pub use sampler::{ginibre, haar_unitary, MubRng, GENERATOR_ID};
pub use search::{
    histogram, run_search, run_trial, HistogramBin, SearchConfig, SearchReport, TrialResult,
    TrialTermination,
};
