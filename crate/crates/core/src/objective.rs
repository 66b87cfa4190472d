//! The non-unbiasedness functional over a set of bases, the MUB predicate
//! built on it, and the prime-dimension construction used as an oracle.
//!
//! A [`BasisSet`] holds `N` unitaries `U_1..U_N`; the standard basis is the
//! implicit `U_{N+1} = 𝟙`. Residuals are `|(U_k†U_l)_{mn}|² − 1/d` over all
//! pairs `k < l ≤ N+1` and all `(m, n)`, flattened lexicographically in
//! `(k, l, m, n)`. The objective is the sum of their squares.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MubError, Result};
use crate::matrix::{adjoint_mul, Complex, ComplexMatrix};

/// Default success threshold on the objective.
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 1e-6;

/// Unitarity tolerance enforced by [`BasisSet::new`].
pub const BASIS_UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    d: usize,
    bases: Vec<ComplexMatrix>,
}

impl BasisSet {
    pub fn new(d: usize, bases: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(d, bases, BASIS_UNITARY_TOL)
    }

    /// Like [`BasisSet::new`] but with a caller-chosen unitarity tolerance.
    pub fn with_tolerance(d: usize, bases: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        if d == 0 || bases.is_empty() {
            return Err(MubError::InvalidConfig(
                "a basis set needs d >= 1 and at least one unitary".into(),
            ));
        }
        for u in &bases {
            if u.shape() != (d, d) {
                return Err(MubError::DimensionMismatch {
                    op: "BasisSet::new",
                    left: (d, d),
                    right: u.shape(),
                });
            }
            let defect = u.unitarity_defect();
            if !(defect <= tol) {
                return Err(MubError::NotUnitary { max_defect: defect });
            }
        }
        Ok(Self { d, bases })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of explicit unitaries `N` (the identity basis is not counted).
    pub fn n_bases(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[ComplexMatrix] {
        &self.bases
    }

    pub fn into_bases(self) -> Vec<ComplexMatrix> {
        self.bases
    }

    /// Worst `|U†U − 𝟙|` entry over all stored matrices.
    pub fn unitarity_defect(&self) -> f64 {
        self.bases
            .iter()
            .map(ComplexMatrix::unitarity_defect)
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> BasisSetJson {
        BasisSetJson {
            d: self.d,
            bases: self
                .bases
                .iter()
                .map(|u| {
                    (0..self.d)
                        .map(|i| u.row(i).iter().map(|z| [z.re, z.im]).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text + "\n")
    }
}

/// On-disk form: `{"d": d, "bases": [[[[re, im], …], …], …]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSetJson {
    pub d: usize,
    pub bases: Vec<Vec<Vec<[f64; 2]>>>,
}

impl BasisSetJson {
    /// Converts to matrices, checking shapes but not unitarity.
    pub fn to_matrices(&self) -> Result<Vec<ComplexMatrix>> {
        let d = self.d;
        self.bases
            .iter()
            .map(|rows| {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(MubError::InvalidConfig(format!(
                        "every basis must be a {d}x{d} array of [re, im] pairs"
                    )));
                }
                let data = rows
                    .iter()
                    .flatten()
                    .map(|&[re, im]| Complex::new(re, im))
                    .collect();
                ComplexMatrix::from_row_major(d, d, data)
            })
            .collect()
    }
}

/// Number of residual terms, `d²·N·(N+1)/2`.
pub fn residual_len(d: usize, n_bases: usize) -> usize {
    d * d * n_bases * (n_bases + 1) / 2
}

/// Entrywise `|(A†B)_{mn}|²`, row-major `d×d`.
pub fn gram_moduli_sq(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Vec<f64>> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(MubError::DimensionMismatch {
            op: "gram_moduli_sq",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let g = adjoint_mul(a, b)?;
    Ok(g.as_slice().iter().map(|z| z.norm_sqr()).collect())
}

/// Writes the residual block of pair `(k, l)` into `out` (length `d²`).
/// `l == None` stands for the identity basis.
#[inline]
pub(crate) fn pair_residuals(
    d: usize,
    uk: &ComplexMatrix,
    ul: Option<&ComplexMatrix>,
    out: &mut [f64],
) {
    let inv_d = 1.0 / d as f64;
    match ul {
        Some(ul) => {
            // (U_k† U_l)_{mn} = Σ_p conj(U_k[p][m]) U_l[p][n]
            let a = uk.as_slice();
            let b = ul.as_slice();
            for m in 0..d {
                for n in 0..d {
                    let mut acc = Complex::new(0.0, 0.0);
                    for p in 0..d {
                        acc += a[p * d + m].conj() * b[p * d + n];
                    }
                    out[m * d + n] = acc.norm_sqr() - inv_d;
                }
            }
        }
        None => {
            // (U_k† 𝟙)_{mn} = conj(U_k[n][m])
            for m in 0..d {
                for n in 0..d {
                    out[m * d + n] = uk[(n, m)].norm_sqr() - inv_d;
                }
            }
        }
    }
}

/// Offset of pair `(k, l)`, `k < l ≤ N`, in the flattened residual vector.
/// Index `N` is the identity basis.
#[inline]
pub(crate) fn pair_offset(d: usize, n_bases: usize, k: usize, l: usize) -> usize {
    let total = n_bases + 1;
    // Pairs before row k: Σ_{i<k} (total − 1 − i).
    let before = k * (2 * total - k - 1) / 2;
    (before + (l - k - 1)) * d * d
}

/// Residuals for raw unitaries, written into `out`.
pub(crate) fn residuals_into(d: usize, unitaries: &[ComplexMatrix], out: &mut [f64]) {
    let n = unitaries.len();
    debug_assert_eq!(out.len(), residual_len(d, n));
    let block = d * d;
    let mut offset = 0;
    for k in 0..n {
        for l in k + 1..=n {
            let ul = unitaries.get(l);
            pair_residuals(d, &unitaries[k], ul, &mut out[offset..offset + block]);
            offset += block;
        }
    }
}

pub fn residuals(set: &BasisSet) -> Vec<f64> {
    let mut out = vec![0.0; residual_len(set.d, set.n_bases())];
    residuals_into(set.d, &set.bases, &mut out);
    out
}

pub fn objective_value(set: &BasisSet) -> f64 {
    residuals(set).iter().map(|r| r * r).sum()
}

/// Outcome of [`is_mub_set`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MubCheck {
    pub is_mub: bool,
    pub objective: f64,
    /// `max | |⟨ψ_{k,m}|ψ_{l,n}⟩| − 1/√d |` over all cross-basis pairs.
    pub worst_deviation: f64,
}

pub fn is_mub_set(set: &BasisSet, threshold: f64) -> MubCheck {
    let res = residuals(set);
    let objective = res.iter().map(|r| r * r).sum::<f64>();
    let inv_d = 1.0 / set.d as f64;
    let target = inv_d.sqrt();
    let worst_deviation = res
        .iter()
        .map(|r| ((r + inv_d).max(0.0).sqrt() - target).abs())
        .fold(0.0, f64::max);
    MubCheck {
        is_mub: objective <= threshold,
        objective,
        worst_deviation,
    }
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2;
    while i * i <= n {
        if n.is_multiple_of(i) {
            return false;
        }
        i += 1;
    }
    true
}

/// `d` unitaries which, with the standard basis, form `d + 1` mutually
/// unbiased bases in prime dimension `d`.
///
/// For odd `d`, basis `r` has components `⟨n|ψ^r_m⟩ = ω^{r·n² + m·n}/√d`
/// with `ω = e^{2πi/d}`. For `d = 2` the eigenbases of `σx` and `σy`.
pub fn prime_mub_construction(d: usize) -> Result<BasisSet> {
    if !is_prime(d) {
        return Err(MubError::NotPrime(d));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if d == 2 {
        let sx = ComplexMatrix::from_row_major(
            2,
            2,
            vec![
                Complex::new(s, 0.0),
                Complex::new(s, 0.0),
                Complex::new(s, 0.0),
                Complex::new(-s, 0.0),
            ],
        )?;
        let sy = ComplexMatrix::from_row_major(
            2,
            2,
            vec![
                Complex::new(s, 0.0),
                Complex::new(s, 0.0),
                Complex::new(0.0, s),
                Complex::new(0.0, -s),
            ],
        )?;
        return BasisSet::new(2, vec![sx, sy]);
    }
    let norm = 1.0 / (d as f64).sqrt();
    let bases = (0..d)
        .map(|r| {
            // Row n is the component index, column m labels the vector.
            ComplexMatrix::from_fn(d, d, |n, m| {
                let e = (r * n * n + m * n) % d;
                Complex::from_polar(norm, 2.0 * PI * e as f64 / d as f64)
            })
        })
        .collect();
    BasisSet::new(d, bases)
}
