use crate::{Error, Result};

/// Pairwise-difference covariance estimator
/// `(1/n²) Σ_i Σ_j ½ (a_i − a_j)(b_i − b_j)`, evaluated as the double sum.
pub fn pairwise_covariance(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    // The i = j terms vanish and (i, j), (j, i) are equal, so the ½ cancels.
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += (a[i] - a[j]) * (b[i] - b[j]);
        }
    }
    Ok(sum / (n * n) as f64)
}
