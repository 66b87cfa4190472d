//! Real parameterization of Hermitian generators and the map `H ↦ e^{iH}`.
//!
//! A Hermitian `d×d` matrix is packed into `d²` reals: the `d` diagonal
//! entries first, then for each pair `m < n` in lexicographic order the two
//! reals `(a, b)` with `H[m][n] = a + ib` and `H[n][m] = a − ib`.

use std::f64::consts::PI;

use crate::error::{MubError, Result};
use crate::matrix::{hermitian_eig, mul_adjoint, Complex, ComplexMatrix, HERMITIAN_TOL};

/// Entrywise tolerance for the unitary precondition of [`log_unitary`].
pub const UNITARY_TOL: f64 = 1e-10;

/// Width of a cosine cluster in [`log_unitary`] that gets re-diagonalized
/// against the sine part.
const COS_CLUSTER_TOL: f64 = 1e-4;

/// Packed generators of `N` unitaries in dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    d: usize,
    n_bases: usize,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(d: usize, n_bases: usize, values: Vec<f64>) -> Result<Self> {
        let expected = d * d * n_bases;
        if values.len() != expected {
            return Err(MubError::InvalidLength {
                expected,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MubError::NonFinite { coordinate: None });
        }
        Ok(Self { d, n_bases, values })
    }

    pub fn zeros(d: usize, n_bases: usize) -> Self {
        Self {
            d,
            n_bases,
            values: vec![0.0; d * d * n_bases],
        }
    }

    /// Packs the principal logarithms of the given unitaries.
    pub fn from_unitaries(d: usize, unitaries: &[ComplexMatrix]) -> Result<Self> {
        let mut values = Vec::with_capacity(d * d * unitaries.len());
        for u in unitaries {
            if u.shape() != (d, d) {
                return Err(MubError::DimensionMismatch {
                    op: "ParamVector::from_unitaries",
                    left: (d, d),
                    right: u.shape(),
                });
            }
            values.extend(hermitian_to_params(&log_unitary(u)?)?);
        }
        Self::new(d, unitaries.len(), values)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_bases(&self) -> usize {
        self.n_bases
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn segment(&self, k: usize) -> &[f64] {
        let len = self.d * self.d;
        &self.values[k * len..(k + 1) * len]
    }

    /// `e^{iH_k}` for every packed generator.
    pub fn unitaries(&self) -> Result<Vec<ComplexMatrix>> {
        unitaries_from_params(self.d, &self.values)
    }
}

/// Unpacks `values.len() / d²` generators and exponentiates each.
pub fn unitaries_from_params(d: usize, values: &[f64]) -> Result<Vec<ComplexMatrix>> {
    let len = d * d;
    if len == 0 || !values.len().is_multiple_of(len) {
        return Err(MubError::InvalidLength {
            expected: len * (values.len() / len.max(1)).max(1),
            actual: values.len(),
        });
    }
    values
        .chunks_exact(len)
        .map(|seg| exp_i(&params_to_hermitian(seg, d)?))
        .collect()
}

pub fn params_to_hermitian(segment: &[f64], d: usize) -> Result<ComplexMatrix> {
    if segment.len() != d * d {
        return Err(MubError::InvalidLength {
            expected: d * d,
            actual: segment.len(),
        });
    }
    let mut h = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = Complex::new(segment[i], 0.0);
    }
    let mut idx = d;
    for m in 0..d {
        for n in m + 1..d {
            let (a, b) = (segment[idx], segment[idx + 1]);
            h[(m, n)] = Complex::new(a, b);
            h[(n, m)] = Complex::new(a, -b);
            idx += 2;
        }
    }
    Ok(h)
}

/// Exact inverse of [`params_to_hermitian`]: reads the diagonal's real parts
/// and the upper triangle.
pub fn hermitian_to_params(h: &ComplexMatrix) -> Result<Vec<f64>> {
    if !h.is_square() {
        return Err(MubError::NotSquare {
            op: "hermitian_to_params",
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let defect = h.hermiticity_defect();
    if !(defect <= HERMITIAN_TOL) {
        return Err(MubError::NotHermitian { max_defect: defect });
    }
    let d = h.rows();
    let mut out = Vec::with_capacity(d * d);
    out.extend((0..d).map(|i| h[(i, i)].re));
    for m in 0..d {
        for n in m + 1..d {
            out.push(h[(m, n)].re);
            out.push(h[(m, n)].im);
        }
    }
    Ok(out)
}

/// `e^{iH}` through the spectral decomposition of `H`.
pub fn exp_i(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    Ok(eig.apply_fn(|l| Complex::new(l.cos(), l.sin())))
}

/// Principal logarithm: the Hermitian `H` with eigenphases in `(−π, π]` and
/// `e^{iH} = U`.
///
/// `U` is normal, so `C = (U + U†)/2` and `S = (U − U†)/2i` are commuting
/// Hermitian matrices sharing `U`'s eigenvectors. We diagonalize `C`, then
/// split every cluster of nearly equal cosines by diagonalizing `S` inside
/// it; each phase is `atan2(s, c)` of the Rayleigh quotients.
pub fn log_unitary(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !u.is_square() {
        return Err(MubError::NotSquare {
            op: "log_unitary",
            rows: u.rows(),
            cols: u.cols(),
        });
    }
    let defect = u.unitarity_defect();
    if !(defect <= UNITARY_TOL) {
        return Err(MubError::NotUnitary { max_defect: defect });
    }
    let d = u.rows();
    let cos_part = ComplexMatrix::from_fn(d, d, |i, j| (u[(i, j)] + u[(j, i)].conj()) * 0.5);
    let sin_part = ComplexMatrix::from_fn(d, d, |i, j| {
        (u[(i, j)] - u[(j, i)].conj()) * Complex::new(0.0, -0.5)
    });

    let eig_c = hermitian_eig(&cos_part)?;
    let mut vecs = eig_c.eigenvectors;

    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && eig_c.eigenvalues[end] - eig_c.eigenvalues[end - 1] <= COS_CLUSTER_TOL {
            end += 1;
        }
        if end - start > 1 {
            split_cluster(&mut vecs, &sin_part, start, end)?;
        }
        start = end;
    }

    let phases: Vec<f64> = (0..d)
        .map(|k| {
            let c = rayleigh(&cos_part, &vecs, k);
            let s = rayleigh(&sin_part, &vecs, k);
            let theta = s.atan2(c);
            if theta == -PI {
                PI
            } else {
                theta
            }
        })
        .collect();

    let diag: Vec<Complex> = phases.iter().map(|&t| Complex::new(t, 0.0)).collect();
    let h = mul_adjoint(&vecs.mul_diag_right(&diag), &vecs)?;
    Ok(h.hermitian_part())
}

/// Rotates columns `start..end` of `vecs` onto the eigenbasis of `S`
/// restricted to their span.
fn split_cluster(
    vecs: &mut ComplexMatrix,
    s: &ComplexMatrix,
    start: usize,
    end: usize,
) -> Result<()> {
    let d = vecs.rows();
    let m = end - start;
    let block = ComplexMatrix::from_fn(m, m, |a, b| {
        let (ca, cb) = (start + a, start + b);
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..d {
            let mut row = Complex::new(0.0, 0.0);
            for j in 0..d {
                row += s[(i, j)] * vecs[(j, cb)];
            }
            acc += vecs[(i, ca)].conj() * row;
        }
        acc
    })
    .hermitian_part();
    let inner = hermitian_eig(&block)?;
    let old: Vec<Vec<Complex>> = (0..d)
        .map(|i| (start..end).map(|c| vecs[(i, c)]).collect())
        .collect();
    for i in 0..d {
        for b in 0..m {
            let mut acc = Complex::new(0.0, 0.0);
            for a in 0..m {
                acc += old[i][a] * inner.eigenvectors[(a, b)];
            }
            vecs[(i, start + b)] = acc;
        }
    }
    Ok(())
}

fn rayleigh(h: &ComplexMatrix, vecs: &ComplexMatrix, k: usize) -> f64 {
    let d = h.rows();
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..d {
        let mut row = Complex::new(0.0, 0.0);
        for j in 0..d {
            row += h[(i, j)] * vecs[(j, k)];
        }
        acc += vecs[(i, k)].conj() * row;
    }
    acc.re
}
