//! Dense complex linear algebra for the small matrices this crate works with
//! (dimension at most a few dozen).
//!
//! Storage is row-major. Everything here is a pure function of its inputs.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{MubError, Result};

pub type Complex = Complex64;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

/// Default entrywise tolerance for the Hermitian precondition.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Maximum number of cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Relative off-diagonal Frobenius norm at which Jacobi stops.
pub const JACOBI_TOL: f64 = 1e-14;

/// Relative pivot size below which QR reports rank deficiency.
pub const QR_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(MubError::InvalidLength {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diagonal(diag: &[Complex]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// The discrete Fourier matrix with entries `ω^{mn}/√d`, `ω = e^{2πi/d}`.
    pub fn fourier(d: usize) -> Self {
        let norm = 1.0 / (d as f64).sqrt();
        Self::from_fn(d, d, |m, n| {
            let k = (m * n) % d;
            Complex::from_polar(norm, 2.0 * std::f64::consts::PI * k as f64 / d as f64)
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Complex] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, s: Complex) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff: shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry of `|H − H†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entry of `|U†U − 𝟙|`.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let gram = adjoint_mul(self, self).expect("square");
        gram.max_abs_diff(&Self::identity(self.rows))
    }

    /// Multiplies column `j` by `diag[j]`, i.e. returns `self · diag(diag)`.
    pub fn mul_diag_right(&self, diag: &[Complex]) -> Self {
        assert_eq!(diag.len(), self.cols);
        let mut out = self.clone();
        for i in 0..self.rows {
            for (j, &z) in diag.iter().enumerate() {
                out.data[i * self.cols + j] *= z;
            }
        }
        out
    }

    /// Projects onto the Hermitian part `(H + H†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.rows;
        Self::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.cols + j]
    }
}

/// Standard matrix product `A·B`.
pub fn multiply(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(MubError::DimensionMismatch {
            op: "multiply",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (n, m, p) = (a.rows, a.cols, b.cols);
    let mut out = ComplexMatrix::zeros(n, p);
    for i in 0..n {
        let out_row = &mut out.data[i * p..(i + 1) * p];
        for k in 0..m {
            let aik = a.data[i * m + k];
            let b_row = &b.data[k * p..(k + 1) * p];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Conjugate transpose.
pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.cols, a.rows, |i, j| a[(j, i)].conj())
}

/// `A†·B` without materializing the adjoint.
pub fn adjoint_mul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.rows != b.rows {
        return Err(MubError::DimensionMismatch {
            op: "adjoint_mul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (n, m, p) = (a.cols, a.rows, b.cols);
    let mut out = ComplexMatrix::zeros(n, p);
    for k in 0..m {
        let a_row = a.row(k);
        let b_row = b.row(k);
        for (i, &aki) in a_row.iter().enumerate() {
            let aki = aki.conj();
            let out_row = &mut out.data[i * p..(i + 1) * p];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aki * bkj;
            }
        }
    }
    Ok(out)
}

/// `A·B†` without materializing the adjoint.
pub fn mul_adjoint(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.cols {
        return Err(MubError::DimensionMismatch {
            op: "mul_adjoint",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (n, p) = (a.rows, b.rows);
    Ok(ComplexMatrix::from_fn(n, p, |i, j| {
        a.row(i)
            .iter()
            .zip(b.row(j))
            .fold(ZERO, |acc, (&x, &y)| acc + x * y.conj())
    }))
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    /// `V·diag(f(λ))·V†`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Complex) -> ComplexMatrix {
        let diag: Vec<Complex> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let scaled = self.eigenvectors.mul_diag_right(&diag);
        mul_adjoint(&scaled, &self.eigenvectors).expect("square factors")
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_fn(|l| Complex::new(l, 0.0))
    }
}

fn require_square(op: &'static str, a: &ComplexMatrix) -> Result<usize> {
    if a.is_square() {
        Ok(a.rows)
    } else {
        Err(MubError::NotSquare {
            op,
            rows: a.rows,
            cols: a.cols,
        })
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Eigenvalues come back ascending. The result is deterministic for a fixed
/// input.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEig> {
    let n = require_square("hermitian_eig", h)?;
    let defect = h.hermiticity_defect();
    if !(defect <= HERMITIAN_TOL) {
        return Err(MubError::NotHermitian { max_defect: defect });
    }
    let mut a = h.hermitian_part();
    for i in 0..n {
        a[(i, i)].im = 0.0;
    }
    let mut v = ComplexMatrix::identity(n);
    let target = JACOBI_TOL * a.frobenius_norm();

    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(MubError::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Zeroes `a[p][q]` with the unitary `J = diag(1, e^{-iφ})·R(θ)` acting on
/// the (p, q) plane, accumulating `V ← V·J`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = a.rows;
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Skip rotations that would not change the diagonal in floating point.
    if r < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let phase = apq / r; // e^{iφ}
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] in the (p, q) plane.
    let jpp = Complex::new(c, 0.0);
    let jpq = Complex::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    // A ← A·J (columns p, q).
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * jpp + aiq * jqp;
        a[(i, q)] = aip * jpq + aiq * jqq;
    }
    // A ← J†·A (rows p, q).
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = jpp.conj() * apj + jqp.conj() * aqj;
        a[(q, j)] = jpq.conj() * apj + jqq.conj() * aqj;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex::new(app - t * r, 0.0);
    a[(q, q)] = Complex::new(aqq + t * r, 0.0);

    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * jpp + viq * jqp;
        v[(i, q)] = vip * jpq + viq * jqq;
    }
}

/// Householder QR factorization `A = Q·R` of a square matrix.
///
/// Each reflector is built as `v = x + e^{i·arg x₀}‖x‖e₁`, so `R_kk =
/// −e^{i·arg x₀}‖x‖`. The convention is fixed so seeded runs reproduce bit
/// for bit.
pub fn qr_decompose(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = require_square("qr_decompose", a)?;
    let scale = a.frobenius_norm();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);
    let mut v = vec![ZERO; n];

    for k in 0..n {
        let norm_x = (k..n).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if !(norm_x > QR_RANK_TOL * scale) {
            return Err(MubError::RankDeficient {
                column: k,
                pivot: norm_x,
            });
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() == 0.0 {
            ONE
        } else {
            x0 / x0.norm()
        };
        for i in k..n {
            v[i] = r[(i, k)];
        }
        v[k] += phase * norm_x;
        let vnorm_sq: f64 = (k..n).map(|i| v[i].norm_sqr()).sum();
        let beta = 2.0 / vnorm_sq;

        // R ← (𝟙 − β v v†) R on rows k..n.
        for j in k..n {
            let w: Complex = (k..n).map(|i| v[i].conj() * r[(i, j)]).sum();
            let w = w * beta;
            for i in k..n {
                let vi = v[i];
                r[(i, j)] -= vi * w;
            }
        }
        for i in k + 1..n {
            r[(i, k)] = ZERO;
        }
        // Q ← Q (𝟙 − β v v†).
        for i in 0..n {
            let w: Complex = (k..n).map(|l| q[(i, l)] * v[l]).sum();
            let w = w * beta;
            for l in k..n {
                let vl = v[l];
                q[(i, l)] -= w * vl.conj();
            }
        }
    }
    Ok((q, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn random_matrix(n: usize, m: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, m, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        random_matrix(n, n, rng).hermitian_part()
    }

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_row_major(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap()
    }

    #[test]
    fn identity_times_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_matrix(2, 2, &mut rng);
        assert_eq!(multiply(&ComplexMatrix::identity(2), &m).unwrap(), m);
    }

    #[test]
    fn sigma_x_is_an_involution() {
        let sx = sigma_x();
        assert_eq!(multiply(&sx, &sx).unwrap(), ComplexMatrix::identity(2));
    }

    #[test]
    fn multiply_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(3, 3, &mut rng);
        let b = random_matrix(3, 3, &mut rng);
        let got = multiply(&a, &b).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = ZERO;
                for k in 0..3 {
                    s += a[(i, k)] * b[(k, j)];
                }
                assert!((got[(i, j)] - s).norm() <= 1e-13);
            }
        }
    }

    #[test]
    fn multiply_rejects_mismatched_shapes() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            multiply(&a, &b),
            Err(MubError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn multiply_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_matrix(4, 4, &mut rng);
            let b = random_matrix(4, 4, &mut rng);
            let cm = random_matrix(4, 4, &mut rng);
            let left = multiply(&multiply(&a, &b).unwrap(), &cm).unwrap();
            let right = multiply(&a, &multiply(&b, &cm).unwrap()).unwrap();
            assert!(left.max_abs_diff(&right) <= 1e-12);
        }
    }

    #[test]
    fn adjoint_examples() {
        let id = ComplexMatrix::identity(3);
        assert_eq!(adjoint(&id), id);
        let m = ComplexMatrix::from_row_major(2, 2, vec![ZERO, c(0.0, 1.0), ZERO, ZERO]).unwrap();
        let expected =
            ComplexMatrix::from_row_major(2, 2, vec![ZERO, ZERO, c(0.0, -1.0), ZERO]).unwrap();
        assert_eq!(adjoint(&m), expected);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = random_matrix(3, 5, &mut rng);
        assert_eq!(adjoint(&adjoint(&r)), r);
    }

    #[test]
    fn adjoint_mul_agrees_with_explicit_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(4, 4, &mut rng);
        let b = random_matrix(4, 4, &mut rng);
        let explicit = multiply(&adjoint(&a), &b).unwrap();
        assert!(adjoint_mul(&a, &b).unwrap().max_abs_diff(&explicit) <= 1e-14);
        let explicit = multiply(&a, &adjoint(&b)).unwrap();
        assert!(mul_adjoint(&a, &b).unwrap().max_abs_diff(&explicit) <= 1e-14);
    }

    #[test]
    fn eig_of_identity_and_pauli() {
        let e = hermitian_eig(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
        let e = hermitian_eig(&sigma_x()).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [1, 2, 3, 6, 9, 16] {
            let h = random_hermitian(n, &mut rng);
            let e = hermitian_eig(&h).unwrap();
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            assert!(e.eigenvectors.unitarity_defect() <= 1e-12, "n={n}");
            assert!(e.reconstruct().max_abs_diff(&h) <= 1e-12, "n={n}");
            let sum: f64 = e.eigenvalues.iter().sum();
            let tr = h.trace().re;
            assert!((sum - tr).abs() <= 1e-11 * tr.abs().max(1.0));
        }
    }

    #[test]
    fn eig_handles_degenerate_spectrum() {
        // Unitary conjugation of diag(1, 1, 2, 2) keeps exact degeneracies.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (q, _) = qr_decompose(&random_matrix(4, 4, &mut rng)).unwrap();
        let d = ComplexMatrix::from_diagonal(&[ONE, ONE, c(2.0, 0.0), c(2.0, 0.0)]);
        let h = mul_adjoint(&multiply(&q, &d).unwrap(), &q)
            .unwrap()
            .hermitian_part();
        let e = hermitian_eig(&h).unwrap();
        for (got, want) in e.eigenvalues.iter().zip([1.0, 1.0, 2.0, 2.0]) {
            assert!((got - want).abs() < 1e-13);
        }
        assert!(e.reconstruct().max_abs_diff(&h) <= 1e-12);
    }

    #[test]
    fn eig_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_hermitian(6, &mut rng);
        assert_eq!(hermitian_eig(&h).unwrap(), hermitian_eig(&h).unwrap());
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_row_major(2, 2, vec![ZERO, ONE, ZERO, ZERO]).unwrap();
        assert!(matches!(
            hermitian_eig(&m),
            Err(MubError::NotHermitian { .. })
        ));
        assert!(matches!(
            hermitian_eig(&ComplexMatrix::zeros(2, 3)),
            Err(MubError::NotSquare { .. })
        ));
    }

    #[test]
    fn qr_of_identity() {
        let (q, r) = qr_decompose(&ComplexMatrix::identity(3)).unwrap();
        for i in 0..3 {
            assert!((r[(i, i)].norm() - 1.0).abs() < 1e-15);
        }
        assert!(
            multiply(&q, &r)
                .unwrap()
                .max_abs_diff(&ComplexMatrix::identity(3))
                <= 1e-15
        );
    }

    #[test]
    fn qr_of_diagonal() {
        let a = ComplexMatrix::from_diagonal(&[c(2.0, 0.0), c(3.0, 0.0)]);
        let (_, r) = qr_decompose(&a).unwrap();
        assert!((r[(0, 0)].norm() - 2.0).abs() < 1e-15);
        assert!((r[(1, 1)].norm() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn qr_reconstructs_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [1, 2, 5, 8] {
            let a = random_matrix(n, n, &mut rng);
            let (q, r) = qr_decompose(&a).unwrap();
            assert!(q.unitarity_defect() <= 1e-12);
            assert!(multiply(&q, &r).unwrap().max_abs_diff(&a) <= 1e-12);
            for i in 0..n {
                for j in 0..i {
                    assert_eq!(r[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn qr_detects_rank_deficiency() {
        let a = ComplexMatrix::from_row_major(2, 2, vec![ONE, ONE, ONE, ONE]).unwrap();
        assert!(matches!(
            qr_decompose(&a),
            Err(MubError::RankDeficient { column: 1, .. })
        ));
    }
}
