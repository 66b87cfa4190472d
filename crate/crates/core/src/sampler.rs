//! Seeded Gaussian and Haar-unitary sampling.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{MubError, Result};
use crate::matrix::{qr_decompose, Complex, ComplexMatrix};

/// Identifier of the stream generator, written into every result file.
pub const GENERATOR_ID: &str = "chacha20/rand_chacha-0.9/seed_from_u64";

/// Fractional part of the golden ratio in 64-bit fixed point.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of trial `trial_id` in a batch: `base ^ (GOLDEN_GAMMA · (trial_id + 1))`
/// with wrapping multiplication.
pub fn trial_seed(base_seed: u64, trial_id: u64) -> u64 {
    base_seed ^ GOLDEN_GAMMA.wrapping_mul(trial_id.wrapping_add(1))
}

/// A deterministic random stream. Identical seeds give identical streams.
#[derive(Debug, Clone)]
pub struct MubRng {
    seed: u64,
    inner: ChaCha20Rng,
}

impl MubRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Two independent standard normals by Box–Muller.
    pub fn standard_normal_pair(&mut self) -> (f64, f64) {
        // 1 − u lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        (r * c, r * s)
    }
}

/// `d×d` matrix with independent entries whose real and imaginary parts are
/// standard normal.
pub fn ginibre(d: usize, rng: &mut MubRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| {
        let (re, im) = rng.standard_normal_pair();
        Complex::new(re, im)
    })
}

/// Haar-distributed unitary: `Q·diag(R_jj/|R_jj|)` where `QR` factors a
/// Ginibre matrix.
pub fn haar_unitary(d: usize, rng: &mut MubRng) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(MubError::InvalidConfig("dimension must be positive".into()));
    }
    let (q, r) = match qr_decompose(&ginibre(d, rng)) {
        Ok(qr) => qr,
        Err(MubError::RankDeficient { .. }) => qr_decompose(&ginibre(d, rng))?,
        Err(e) => return Err(e),
    };
    let phases: Vec<Complex> = (0..d)
        .map(|j| {
            let rjj = r[(j, j)];
            rjj / rjj.norm()
        })
        .collect();
    Ok(q.mul_diag_right(&phases))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::multiply;

    #[test]
    fn golden_first_pair_for_seed_42() {
        let mut rng = MubRng::new(42);
        let (a, b) = rng.standard_normal_pair();
        assert_eq!((a, b), GOLDEN_SEED_42);
        let mut again = MubRng::new(42);
        assert_eq!(again.standard_normal_pair(), (a, b));
    }

    // Captured from the first build; guards the stream against silent changes.
    const GOLDEN_SEED_42: (f64, f64) = (-1.0151557681372851, 0.642460076658858);

    #[test]
    fn normal_moments() {
        let mut rng = MubRng::new(1);
        let n = 100_000;
        let mut xs = Vec::with_capacity(n);
        while xs.len() < n {
            let (a, b) = rng.standard_normal_pair();
            xs.push(a);
            xs.push(b);
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!(var > 0.97 && var < 1.03, "var {var}");
    }

    #[test]
    fn ginibre_entry_statistics() {
        let mut rng = MubRng::new(2);
        let samples = 10_000;
        let mut mean = Complex::new(0.0, 0.0);
        let mut second = 0.0;
        for _ in 0..samples {
            let z = ginibre(3, &mut rng)[(0, 0)];
            mean += z;
            second += z.norm_sqr();
        }
        mean /= samples as f64;
        second /= samples as f64;
        assert!(mean.norm() < 0.05, "mean {mean}");
        assert!(second > 1.9 && second < 2.1, "E|z|^2 {second}");
        assert_eq!(ginibre(1, &mut rng).shape(), (1, 1));
    }

    #[test]
    fn haar_samples_are_unitary_and_reproducible() {
        let mut rng = MubRng::new(3);
        for d in 1..=8 {
            let u = haar_unitary(d, &mut rng).unwrap();
            assert!(u.unitarity_defect() <= 1e-12);
        }
        let a = haar_unitary(5, &mut MubRng::new(99)).unwrap();
        let b = haar_unitary(5, &mut MubRng::new(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn haar_first_moment_d6() {
        let d = 6;
        let samples = 10_000;
        let mut rng = MubRng::new(4);
        let mut sums = vec![0.0; d * d];
        let mut sq = vec![0.0; d * d];
        for _ in 0..samples {
            let u = haar_unitary(d, &mut rng).unwrap();
            for (k, z) in u.as_slice().iter().enumerate() {
                let p = z.norm_sqr();
                sums[k] += p;
                sq[k] += p * p;
            }
        }
        for k in 0..d * d {
            let mean = sums[k] / samples as f64;
            let var = sq[k] / samples as f64 - mean * mean;
            let sigma = (var / samples as f64).sqrt();
            assert!((mean - 1.0 / 6.0).abs() < 0.01, "entry {k}: {mean}");
            assert!(
                (mean - 1.0 / 6.0).abs() < 3.0 * sigma + 1e-12,
                "entry {k}: {mean}"
            );
        }
    }

    /// Two-sample Kolmogorov–Smirnov statistic.
    fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut worst) = (0, 0, 0.0_f64);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            worst = worst.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        worst
    }

    #[test]
    fn left_invariance_spot_check() {
        let d = 4;
        let n = 10_000;
        let mut rng = MubRng::new(5);
        let v = haar_unitary(d, &mut MubRng::new(6)).unwrap();
        let plain: Vec<f64> = (0..n)
            .map(|_| haar_unitary(d, &mut rng).unwrap()[(0, 0)].norm_sqr())
            .collect();
        let rotated: Vec<f64> = (0..n)
            .map(|_| {
                let u = haar_unitary(d, &mut rng).unwrap();
                multiply(&v, &u).unwrap()[(0, 0)].norm_sqr()
            })
            .collect();
        let stat = ks_statistic(plain, rotated);
        // Critical value at α = 0.01: 1.628·sqrt(2/n).
        let critical = 1.628 * (2.0 / n as f64).sqrt();
        assert!(stat < critical, "KS {stat} >= {critical}");
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| trial_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(trial_seed(0, 0), GOLDEN_GAMMA);
    }
}
