use super::GhParams;
use crate::error::{Error, Result};
use crate::numeric::bessel::ln_bessel_k;

/// ln E[e^{uX}], finite for -alpha - beta < u < alpha - beta.
///
/// ```text
/// M(u) = e^{u mu} (gamma^2 / (alpha^2 - (beta+u)^2))^{lambda/2} K_lambda(delta sqrt(alpha^2 - (beta+u)^2)) / K_lambda(delta gamma)
/// ```
/// and for delta = 0, M(u) = e^{u mu} (gamma^2 / (alpha^2 - (beta+u)^2))^lambda.
pub(super) fn ln_mgf(p: &GhParams, u: f64) -> Result<f64> {
    let (lo, hi) = p.mgf_strip();
    if !(u > lo && u < hi) {
        return Err(Error::Domain { u, lo, hi });
    }
    let g2 = p.alpha * p.alpha - p.beta * p.beta;
    let bu = p.beta + u;
    let g2u = p.alpha * p.alpha - bu * bu;
    let ratio = (g2 / g2u).ln();
    if p.is_gamma_mixture() {
        Ok(u * p.mu + p.lambda * ratio)
    } else {
        Ok(u * p.mu + 0.5 * p.lambda * ratio + ln_bessel_k(p.lambda, p.delta * g2u.sqrt())
            - ln_bessel_k(p.lambda, p.delta * g2.sqrt()))
    }
}
