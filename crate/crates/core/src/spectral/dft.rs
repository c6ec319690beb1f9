//! Forward and inverse DFT of one model year.
//!
//! Forward: `c_k = Σ_j x_j e^{−2πi jk/N}` (unnormalised), bins `0..=N/2`.
//! Inverse: conjugate-symmetric real reconstruction with the `1/N` factor;
//! DC and Nyquist enter once and only through their real parts.

use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result, HOURS_PER_YEAR};

pub struct RealDft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RealDft {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n.is_multiple_of(2), "even transform length required");
        let mut planner = FftPlanner::new();
        RealDft {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Shared plan for 8760-hour years.
    pub fn year() -> &'static RealDft {
        static PLAN: OnceLock<RealDft> = OnceLock::new();
        PLAN.get_or_init(|| RealDft::new(HOURS_PER_YEAR))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_bins(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn forward(&self, series: &[f64]) -> Result<Vec<Complex64>> {
        if series.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: series.len(),
            });
        }
        let mut buf: Vec<Complex64> = series.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf.truncate(self.n_bins());
        Ok(buf)
    }

    pub fn inverse(&self, coeffs: &[Complex64]) -> Result<Vec<f64>> {
        let half = self.n / 2;
        if coeffs.len() != half + 1 {
            return Err(Error::LengthMismatch {
                expected: half + 1,
                got: coeffs.len(),
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        buf[0] = Complex64::new(coeffs[0].re, 0.0);
        buf[half] = Complex64::new(coeffs[half].re, 0.0);
        for k in 1..half {
            buf[k] = coeffs[k];
            buf[self.n - k] = coeffs[k].conj();
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        debug_assert!({
            let peak = buf.iter().fold(1.0f64, |m, c| m.max(c.re.abs()));
            buf.iter().all(|c| c.im.abs() <= 1e-9 * peak)
        });
        Ok(buf.iter().map(|c| c.re * scale).collect())
    }
}

pub fn dft_year(series: &[f64]) -> Result<Vec<Complex64>> {
    RealDft::year().forward(series)
}

pub fn inverse_dft(coeffs: &[Complex64]) -> Result<Vec<f64>> {
    RealDft::year().inverse(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    /// Direct O(N²) summation, the independent oracle for the FFT path.
    fn naive_dft(x: &[f64], k: usize) -> Complex64 {
        let n = x.len() as f64;
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let ang = -TAU * (j as f64) * (k as f64) / n;
                Complex64::new(v * ang.cos(), v * ang.sin())
            })
            .sum()
    }

    #[test]
    fn constant_is_dc_only() {
        let c = dft_year(&vec![2.5; HOURS_PER_YEAR]).unwrap();
        assert_eq!(c.len(), HOURS_PER_YEAR / 2 + 1);
        assert!((c[0].re - 8760.0 * 2.5).abs() < 1e-9);
        let dc = c[0].norm();
        assert!(c[1..].iter().all(|v| v.norm() < 1e-6 * dc));
    }

    #[test]
    fn single_tone() {
        let x: Vec<f64> = (0..HOURS_PER_YEAR).map(|j| (TAU * j as f64 / 8760.0).cos()).collect();
        let c = dft_year(&x).unwrap();
        assert!((c[1].norm() - 4380.0).abs() < 1e-8);
        assert!(c
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != 1)
            .all(|(_, v)| v.norm() < 1e-7));
    }

    #[test]
    fn matches_naive_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..HOURS_PER_YEAR).map(|_| rng.random::<f64>() - 0.3).collect();
        let c = dft_year(&x).unwrap();
        let scale = c.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        for k in [0usize, 1, 2, 7, 365, 1000, 4379, 4380] {
            let o = naive_dft(&x, k);
            assert!((c[k] - o).norm() <= 1e-9 * scale, "bin {k}");
        }
    }

    #[test]
    fn round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let x: Vec<f64> = (0..HOURS_PER_YEAR).map(|_| rng.random::<f64>() * 20.0 - 10.0).collect();
            let y = inverse_dft(&dft_year(&x).unwrap()).unwrap();
            assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-9));
        }
    }

    #[test]
    fn zeros_and_tone_reconstruct() {
        let zero = vec![Complex64::new(0.0, 0.0); HOURS_PER_YEAR / 2 + 1];
        assert!(inverse_dft(&zero).unwrap().iter().all(|v| *v == 0.0));
        let mut c = zero;
        c[1] = Complex64::new(4380.0, 0.0);
        let x = inverse_dft(&c).unwrap();
        for (t, v) in x.iter().enumerate() {
            assert!((v - (TAU * t as f64 / 8760.0).cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn wrong_length_is_an_error() {
        assert!(dft_year(&[0.0; 100]).is_err());
        assert!(inverse_dft(&[Complex64::new(0.0, 0.0); 4380]).is_err());
    }
}
