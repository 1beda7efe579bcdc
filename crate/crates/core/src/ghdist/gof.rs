//! Kolmogorov-Smirnov and Anderson-Darling goodness of fit against a fitted law.
//!
//! p-values use the asymptotic null distributions (Kolmogorov's limit law
//! and Marsaglia's approximation to the limiting A-D distribution). They are
//! nominal when the parameters were estimated from the same data.

use super::{GhCdf, GhParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofReport {
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub ad_statistic: f64,
    pub ad_p_value: f64,
    pub sample_size: usize,
}

pub fn goodness_of_fit(data: &[f64], params: &GhParams) -> Result<GofReport> {
    let cdf = GhCdf::new(params);
    goodness_of_fit_with(data, |x| cdf.cdf(x))
}

/// Both statistics against an arbitrary continuous distribution function.
pub fn goodness_of_fit_with<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> Result<GofReport> {
    if data.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("goodness of fit: non-finite observation".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let u: Vec<f64> = sorted.iter().map(|&x| cdf(x)).collect();
    let n = u.len() as f64;

    let mut d = 0.0f64;
    for (i, &ui) in u.iter().enumerate() {
        let i = i as f64;
        d = d.max(ui - i / n).max((i + 1.0) / n - ui);
    }

    let clamp = |v: f64| v.clamp(1e-300, 1.0 - 1e-16);
    let mut s = 0.0;
    for i in 0..u.len() {
        let w = 2.0 * i as f64 + 1.0;
        s += w * (clamp(u[i]).ln() + (1.0 - clamp(u[u.len() - 1 - i])).ln());
    }
    let a2 = (-n - s / n).max(0.0);

    Ok(GofReport {
        ks_statistic: d,
        ks_p_value: kolmogorov_survival(n.sqrt() * d),
        ad_statistic: a2,
        ad_p_value: (1.0 - ad_inf(a2)).clamp(0.0, 1.0),
        sample_size: u.len(),
    })
}

/// P(K > t) for the Kolmogorov limit distribution.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let v = if t < 1.0 {
        // Jacobi theta form converges fast for small t.
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * t * t);
        let mut s = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            s += (-m * m * c).exp();
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * s
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let k = k as f64;
            let term = (-2.0 * k * k * t * t).exp();
            s += if k as i64 % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        2.0 * s
    };
    v.clamp(0.0, 1.0)
}

/// Limiting distribution function of the Anderson-Darling statistic (Marsaglia and Marsaglia).
pub fn ad_inf(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z < 2.0 {
        (-1.2337141 / z).exp() / z.sqrt()
            * (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z)
    } else {
        (-(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z).exp()).exp()
    }
}
