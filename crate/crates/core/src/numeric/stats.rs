//! Sample statistics shared by several modules.
//!
//! The empirical quantile convention used throughout the crate is the lower
//! order statistic: the q-quantile of N values is the ceil(qN)-th smallest.

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the n - 1 divisor.
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn sample_sd(x: &[f64]) -> f64 {
    sample_variance(x).sqrt()
}

/// Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Moment skewness m3 / m2^{3/2} and excess kurtosis m4 / m2^2 - 3.
pub fn skewness_kurtosis(x: &[f64]) -> (f64, f64) {
    let m = mean(x);
    let n = x.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// 1-based rank of the lower empirical q-quantile among `n` values.
pub fn quantile_rank(q: f64, n: usize) -> usize {
    // The 1e-9 guard keeps qN that is an integer up to rounding (0.1 * 30) on the integer.
    let k = (q * n as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(n)
}

/// Lower empirical q-quantile. Reorders `values` in place.
pub fn lower_quantile_in_place(values: &mut [f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Input(format!("quantile level {q} outside (0, 1)")));
    }
    let k = quantile_rank(q, values.len());
    let (_, v, _) = values.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*v)
}

/// Lower empirical q-quantile of a slice.
pub fn lower_quantile(values: &[f64], q: f64) -> Result<f64> {
    let mut buf = values.to_vec();
    lower_quantile_in_place(&mut buf, q)
}

/// Sample covariance matrix (n - 1 divisor) of column series.
pub fn covariance_matrix(columns: &[Vec<f64>]) -> nalgebra::DMatrix<f64> {
    let k = columns.len();
    let n = columns.first().map_or(0, Vec::len);
    let means: Vec<f64> = columns.iter().map(|c| mean(c)).collect();
    let mut cov = nalgebra::DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let s: f64 = (0..n).map(|t| (columns[i][t] - means[i]) * (columns[j][t] - means[j])).sum();
            let v = s / (n as f64 - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}
