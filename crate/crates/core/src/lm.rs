//! Levenberg–Marquardt minimization of `F(x) = Σ f_i(x)²` with
//! forward-difference Jacobians.
//!
//! Every iteration solves `(JᵀJ + λ·D)·δ = −Jᵀf`, where `D` is chosen by
//! [`DampingScale`]: the identity (the default), Marquardt's `diag(JᵀJ)`, or
//! its running maximum over the run. A step is accepted only when it lowers
//! `F`, after which `λ` shrinks; otherwise `λ` grows and the step is
//! recomputed from the same Jacobian. The run stops when an accepted step
//! changes `F` by less than `func_change_tol`.

use serde::{Deserialize, Serialize};

use crate::error::{MubError, Result};

/// Threshold on `‖Jᵀf‖_∞` below which the current point is treated as
/// stationary.
pub const GRADIENT_TOL: f64 = 1e-12;

/// Diagonal shift applied once when the damped normal matrix fails to
/// factor.
const REGULARIZATION: f64 = 1e-12;

/// A nonlinear least-squares problem `x ↦ f(x) ∈ ℝ^L`.
pub trait LeastSquaresProblem {
    fn num_params(&self) -> usize;

    fn num_residuals(&self) -> usize;

    /// Evaluates `f(x)` into `out`, which has length [`num_residuals`].
    ///
    /// [`num_residuals`]: LeastSquaresProblem::num_residuals
    fn residuals(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// Forward-difference Jacobian at `x`, given `f0 = f(x)`. Problems with
    /// exploitable structure may override this, but must produce the same
    /// values as [`fd_jacobian`].
    fn jacobian(&self, x: &[f64], f0: &[f64], fd_step: f64) -> Result<Jacobian> {
        fd_jacobian(self, x, f0, fd_step)
    }
}

/// Wraps a closure as a [`LeastSquaresProblem`].
pub struct FnProblem<F> {
    num_params: usize,
    num_residuals: usize,
    f: F,
}

impl<F> FnProblem<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(num_params: usize, num_residuals: usize, f: F) -> Self {
        Self {
            num_params,
            num_residuals,
            f,
        }
    }
}

impl<F> LeastSquaresProblem for FnProblem<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    fn num_params(&self) -> usize {
        self.num_params
    }

    fn num_residuals(&self) -> usize {
        self.num_residuals
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let v = (self.f)(x);
        if v.len() != out.len() {
            return Err(MubError::InvalidLength {
                expected: out.len(),
                actual: v.len(),
            });
        }
        out.copy_from_slice(&v);
        Ok(())
    }
}

/// Dense `L×k` Jacobian stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Jacobian {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// `JᵀJ` (row-major `k×k`) and `Jᵀf`.
    fn normal_equations(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = self.cols;
        let mut jtj = vec![0.0; k * k];
        let mut jtf = vec![0.0; k];
        // Columns that are identically zero over long runs are common for
        // block-structured problems; record their support once.
        let support: Vec<(usize, usize)> = (0..k).map(|j| nonzero_span(self.column(j))).collect();
        for a in 0..k {
            let ca = self.column(a);
            jtf[a] = dot(ca, f, support[a]);
            for b in a..k {
                let lo = support[a].0.max(support[b].0);
                let hi = support[a].1.min(support[b].1);
                let v = if lo < hi {
                    dot(ca, self.column(b), (lo, hi))
                } else {
                    0.0
                };
                jtj[a * k + b] = v;
                jtj[b * k + a] = v;
            }
        }
        (jtj, jtf)
    }
}

fn nonzero_span(col: &[f64]) -> (usize, usize) {
    let lo = col.iter().position(|&v| v != 0.0).unwrap_or(col.len());
    let hi = col.iter().rposition(|&v| v != 0.0).map_or(lo, |i| i + 1);
    (lo, hi.max(lo))
}

#[inline]
fn dot(a: &[f64], b: &[f64], (lo, hi): (usize, usize)) -> f64 {
    a[lo..hi].iter().zip(&b[lo..hi]).map(|(x, y)| x * y).sum()
}

/// Probe step for coordinate value `xj`: `fd_step·max(|xj|, 1)`.
#[inline]
pub fn fd_probe_step(fd_step: f64, xj: f64) -> f64 {
    fd_step * xj.abs().max(1.0)
}

/// Forward-difference Jacobian `J_ij = (f_i(x + h_j e_j) − f_i(x)) / h_j`.
///
/// `h_j` is [`fd_probe_step`], rounded to the representable increment
/// `(x_j + h_j) − x_j`.
pub fn fd_jacobian<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    f0: &[f64],
    fd_step: f64,
) -> Result<Jacobian> {
    let (l, k) = (problem.num_residuals(), problem.num_params());
    let mut jac = Jacobian::zeros(l, k);
    let mut probe = x.to_vec();
    let mut fp = vec![0.0; l];
    for j in 0..k {
        let xj = x[j];
        probe[j] = xj + fd_probe_step(fd_step, xj);
        let h = probe[j] - xj;
        problem.residuals(&probe, &mut fp)?;
        probe[j] = xj;
        if fp.iter().any(|v| !v.is_finite()) {
            return Err(MubError::NonFinite {
                coordinate: Some(j),
            });
        }
        for ((out, &a), &b) in jac.column_mut(j).iter_mut().zip(&fp).zip(f0) {
            *out = (a - b) / h;
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub func_change_tol: f64,
    pub max_iterations: usize,
    pub fd_step: f64,
    pub damping_init: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    pub damping_max: f64,
    pub damping_scale: DampingScale,
}

/// Diagonal `D` in the damped system `(JᵀJ + λ·D)·δ = −Jᵀf`.
///
/// The MUB objective is invariant under rephasing of basis vectors, so its
/// `JᵀJ` is always singular. With `D = diag(JᵀJ)` a coordinate whose column
/// is momentarily tiny gets a step inversely proportional to that column's
/// norm, which on small dimensions stalls a noticeable fraction of runs.
/// `Identity` does not have that failure mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DampingScale {
    /// `D = diag(JᵀJ)` of the current Jacobian.
    JtjDiagonal,
    /// `D_i = max` of `(JᵀJ)_ii` over all Jacobians seen so far in the run.
    RunningMax,
    /// `D = 𝟙`.
    Identity,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            func_change_tol: 1e-8,
            max_iterations: 400,
            fd_step: f64::EPSILON.sqrt(),
            damping_init: 1e-3,
            damping_up: 10.0,
            damping_down: 0.1,
            damping_max: 1e16,
            damping_scale: DampingScale::Identity,
        }
    }
}

impl LmOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("func_change_tol", self.func_change_tol),
            ("fd_step", self.fd_step),
            ("damping_init", self.damping_init),
            ("damping_max", self.damping_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MubError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.max_iterations == 0 {
            return Err(MubError::InvalidConfig(
                "max_iterations must be positive".into(),
            ));
        }
        if !(self.damping_up > 1.0 && self.damping_down > 0.0 && self.damping_down < 1.0) {
            return Err(MubError::InvalidConfig(
                "damping factors must satisfy damping_up > 1 > damping_down > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    FunctionChangeTol,
    MaxIterations,
    DampingOverflow,
    GradientVanished,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::FunctionChangeTol => "FunctionChangeTol",
            Termination::MaxIterations => "MaxIterations",
            Termination::DampingOverflow => "DampingOverflow",
            Termination::GradientVanished => "GradientVanished",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    pub x_final: Vec<f64>,
    pub objective_final: f64,
    /// Number of Jacobian evaluations, i.e. outer iterations started.
    pub iterations: usize,
    pub termination: Termination,
    /// Objective at the start point followed by one entry per accepted step.
    pub objective_trace: Vec<f64>,
}

fn sum_sq(f: &[f64]) -> f64 {
    f.iter().map(|v| v * v).sum()
}

/// In-place Cholesky factorization of a row-major SPD matrix; returns
/// `false` if a pivot is not positive.
fn cholesky(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for p in 0..j {
            d -= a[j * n + p] * a[j * n + p];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let (ri, rj) = (i * n, j * n);
            let mut s = a[ri + j];
            for p in 0..j {
                s -= a[ri + p] * a[rj + p];
            }
            a[ri + j] = s / d;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i * n + p] * b[p];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for p in i + 1..n {
            s -= l[p * n + i] * b[p];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `(JᵀJ + λ·D)·δ = −Jᵀf`, shifting the diagonal once by a tiny
/// amount if the damped matrix does not factor.
fn damped_step(
    jtj: &[f64],
    jtf: &[f64],
    scale: &[f64],
    lambda: f64,
    work: &mut Vec<f64>,
) -> Option<Vec<f64>> {
    let k = jtf.len();
    for attempt in 0..2 {
        work.clear();
        work.extend_from_slice(jtj);
        let max_diag = (0..k).map(|i| jtj[i * k + i]).fold(0.0, f64::max);
        for i in 0..k {
            work[i * k + i] += lambda * scale[i];
            if attempt == 1 {
                work[i * k + i] += REGULARIZATION * max_diag.max(1.0);
            }
        }
        if cholesky(work, k) {
            let mut delta: Vec<f64> = jtf.iter().map(|g| -g).collect();
            cholesky_solve(work, k, &mut delta);
            if delta.iter().all(|v| v.is_finite()) {
                return Some(delta);
            }
        }
    }
    None
}

/// Minimizes `Σ f_i(x)²` from `x0`.
///
/// Errors only if the residuals at `x0` are unusable or the Jacobian cannot
/// be evaluated; every other stop is reported through
/// [`LmResult::termination`].
pub fn lm_minimize<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    opts: &LmOptions,
) -> Result<LmResult> {
    opts.validate()?;
    let k = problem.num_params();
    if x0.len() != k {
        return Err(MubError::InvalidLength {
            expected: k,
            actual: x0.len(),
        });
    }
    let l = problem.num_residuals();
    let mut x = x0.to_vec();
    let mut f = vec![0.0; l];
    problem.residuals(&x, &mut f)?;
    if f.iter().any(|v| !v.is_finite()) {
        return Err(MubError::NonFinite { coordinate: None });
    }
    let mut objective = sum_sq(&f);
    let mut trace = vec![objective];
    let mut lambda = opts.damping_init;
    let mut iterations = 0;
    let mut x_new = vec![0.0; k];
    let mut f_new = vec![0.0; l];
    let mut work = Vec::with_capacity(k * k);
    let mut scale = vec![0.0; k];

    let finish = |x: Vec<f64>, objective, iterations, termination, trace| LmResult {
        x_final: x,
        objective_final: objective,
        iterations,
        termination,
        objective_trace: trace,
    };

    loop {
        if iterations >= opts.max_iterations {
            return Ok(finish(
                x,
                objective,
                iterations,
                Termination::MaxIterations,
                trace,
            ));
        }
        let jac = problem.jacobian(&x, &f, opts.fd_step)?;
        let (jtj, jtf) = jac.normal_equations(&f);
        for (i, d) in scale.iter_mut().enumerate() {
            let diag = jtj[i * k + i];
            *d = match opts.damping_scale {
                DampingScale::JtjDiagonal => diag,
                DampingScale::RunningMax => d.max(diag),
                DampingScale::Identity => 1.0,
            };
        }
        if jtf.iter().fold(0.0_f64, |m, g| m.max(g.abs())) < GRADIENT_TOL {
            return Ok(finish(
                x,
                objective,
                iterations,
                Termination::GradientVanished,
                trace,
            ));
        }
        iterations += 1;

        loop {
            let Some(delta) = damped_step(&jtj, &jtf, &scale, lambda, &mut work) else {
                return Ok(finish(
                    x,
                    objective,
                    iterations,
                    Termination::DampingOverflow,
                    trace,
                ));
            };
            for ((xn, xi), di) in x_new.iter_mut().zip(&x).zip(&delta) {
                *xn = xi + di;
            }
            let candidate = match problem.residuals(&x_new, &mut f_new) {
                Ok(()) if f_new.iter().all(|v| v.is_finite()) => sum_sq(&f_new),
                _ => f64::INFINITY,
            };
            if candidate < objective {
                let change = objective - candidate;
                std::mem::swap(&mut x, &mut x_new);
                std::mem::swap(&mut f, &mut f_new);
                objective = candidate;
                trace.push(objective);
                lambda *= opts.damping_down;
                if change < opts.func_change_tol {
                    return Ok(finish(
                        x,
                        objective,
                        iterations,
                        Termination::FunctionChangeTol,
                        trace,
                    ));
                }
                break;
            }
            lambda *= opts.damping_up;
            if lambda > opts.damping_max {
                return Ok(finish(
                    x,
                    objective,
                    iterations,
                    Termination::DampingOverflow,
                    trace,
                ));
            }
        }
    }
}
