//! Empirical-distribution mapping between physical units and N(0, 1).
//!
//! Forward: `Φ⁻¹(F̃(x))` with the Hazen plotting position `F̃ = (r − 0.5)/n`
//! and mid-ranks for ties. Backward: `F⁻¹(Φ(z))`, linear between order
//! statistics and clamped to the observed range.

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::{Error, Result};

/// Standard normal distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile function, `p ∈ (0, 1)`.
///
/// One Newton step on top of `erfc_inv` brings `Φ(Φ⁻¹(p))` back to `p`
/// within a few ulps.
pub fn norm_quantile(p: f64) -> f64 {
    let z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    if !z.is_finite() {
        return z;
    }
    let density = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if density <= 0.0 {
        return z;
    }
    // Work on the smaller tail so the residual keeps its relative precision.
    let residual = if p < 0.5 {
        norm_cdf(z) - p
    } else {
        (1.0 - p) - norm_cdf(-z)
    };
    z - residual / density
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    /// Wraps values that are already sorted ascending (e.g. loaded from disk).
    pub fn from_sorted(sorted: Vec<f64>) -> Result<Self> {
        if sorted.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: sorted.len(),
            });
        }
        if let Some(index) = sorted.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if sorted.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidModel("ecdf values are not sorted".into()));
        }
        Ok(EmpiricalCdf { sorted })
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    /// Raw ECDF `#{v ≤ x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Mid-rank plotting position clamped to `[0.5/n, 1 − 0.5/n]`.
    pub fn plotting_position(&self, x: f64) -> f64 {
        let n = self.len() as f64;
        let below = self.sorted.partition_point(|&v| v < x);
        let at_or_below = self.sorted.partition_point(|&v| v <= x);
        let u = (below + at_or_below) as f64 / (2.0 * n);
        u.clamp(0.5 / n, 1.0 - 0.5 / n)
    }

    /// Inverse of [`plotting_position`](Self::plotting_position) with linear
    /// interpolation between order statistics.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.len();
        // 1-based fractional rank whose plotting position is `u`.
        let pos = u * n as f64 + 0.5;
        if pos <= 1.0 {
            return self.min();
        }
        if pos >= n as f64 {
            return self.max();
        }
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 {
            return self.sorted[nearest as usize - 1];
        }
        let r = pos.floor() as usize;
        let frac = pos - r as f64;
        let lo = self.sorted[r - 1];
        let hi = self.sorted[r];
        lo + frac * (hi - lo)
    }
}

pub fn fit_ecdf(series: &[f64]) -> Result<EmpiricalCdf> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(index) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: 1 });
    }
    Ok(EmpiricalCdf { sorted })
}

pub fn gaussianize(series: &[f64], cdf: &EmpiricalCdf) -> Vec<f64> {
    series
        .iter()
        .map(|&x| norm_quantile(cdf.plotting_position(x)))
        .collect()
}

pub fn degaussianize(series: &[f64], cdf: &EmpiricalCdf) -> Vec<f64> {
    series.iter().map(|&z| cdf.quantile(norm_cdf(z))).collect()
}
