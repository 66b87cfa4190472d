//! The MUB objective as a least-squares problem over packed Hermitian
//! generators.

use crate::error::{MubError, Result};
use crate::lm::{fd_probe_step, Jacobian, LeastSquaresProblem};
use crate::matrix::ComplexMatrix;
use crate::objective::{pair_offset, pair_residuals, residual_len, residuals_into};
use crate::param::{exp_i, params_to_hermitian, unitaries_from_params};

/// Residuals of `N` unitaries `e^{iH_k}` against each other and the standard
/// basis, as a function of the `d²·N` packed generator entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MubProblem {
    d: usize,
    n_bases: usize,
}

impl MubProblem {
    pub fn new(d: usize, n_bases: usize) -> Result<Self> {
        if d < 1 || n_bases < 1 {
            return Err(MubError::InvalidConfig(
                "need d >= 1 and at least one free basis".into(),
            ));
        }
        Ok(Self { d, n_bases })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_bases(&self) -> usize {
        self.n_bases
    }
}

impl LeastSquaresProblem for MubProblem {
    fn num_params(&self) -> usize {
        self.d * self.d * self.n_bases
    }

    fn num_residuals(&self) -> usize {
        residual_len(self.d, self.n_bases)
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let us = unitaries_from_params(self.d, x)?;
        if us.len() != self.n_bases {
            return Err(MubError::InvalidLength {
                expected: self.num_params(),
                actual: x.len(),
            });
        }
        residuals_into(self.d, &us, out);
        Ok(())
    }

    /// Same forward differences as the generic routine, but a probe of
    /// generator `k` only re-exponentiates `H_k` and only recomputes the
    /// pairs that involve basis `k`; all other entries of the column are
    /// exactly zero.
    fn jacobian(&self, x: &[f64], f0: &[f64], fd_step: f64) -> Result<Jacobian> {
        let (d, n) = (self.d, self.n_bases);
        let seg_len = d * d;
        let us = unitaries_from_params(d, x)?;
        let mut jac = Jacobian::zeros(self.num_residuals(), self.num_params());
        let mut seg = vec![0.0; seg_len];
        let mut block = vec![0.0; seg_len];

        for k in 0..n {
            seg.copy_from_slice(&x[k * seg_len..(k + 1) * seg_len]);
            for t in 0..seg_len {
                let j = k * seg_len + t;
                let xj = seg[t];
                seg[t] = xj + fd_probe_step(fd_step, xj);
                let h = seg[t] - xj;
                let uk = exp_i(&params_to_hermitian(&seg, d)?)?;
                seg[t] = xj;

                let col = jac.column_mut(j);
                let mut write = |off: usize, block: &[f64]| -> Result<()> {
                    for (i, &v) in block.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(MubError::NonFinite {
                                coordinate: Some(j),
                            });
                        }
                        col[off + i] = (v - f0[off + i]) / h;
                    }
                    Ok(())
                };
                for a in 0..k {
                    pair_residuals(d, &us[a], Some(&uk), &mut block);
                    write(pair_offset(d, n, a, k), &block)?;
                }
                for l in k + 1..=n {
                    let ul: Option<&ComplexMatrix> = us.get(l);
                    pair_residuals(d, &uk, ul, &mut block);
                    write(pair_offset(d, n, k, l), &block)?;
                }
            }
        }
        Ok(jac)
    }
}
