//! The Generalized Hyperbolic family and its VG and NIG special cases.
//!
//! A GH law is the normal mean-variance mixture X = mu + beta W + sqrt(W) Z
//! with W ~ GIG(lambda, chi = delta^2, psi = alpha^2 - beta^2). Univariate laws
//! are stored as (lambda, alpha, beta, delta, mu). The multivariate form in
//! [`bivariate`] uses (lambda, chi, psi, mu, Sigma, gamma); for one dimension
//! with dispersion sigma^2 the two are related by
//!
//! ```text
//! chi = delta^2,  psi = alpha^2 - beta^2,  gamma = beta        (sigma = 1)
//! alpha = sqrt((psi + gamma^2 / sigma^2) / sigma^2),  beta = gamma / sigma^2,  delta = sigma sqrt(chi)
//! ```

pub mod bivariate;
mod cdf;
mod density;
pub mod fit;
mod gig;
pub mod gof;
mod mgf;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use cdf::GhCdf;
pub use density::GhDensity;
pub use gig::{GigSampler, Mixing};

use crate::error::{Error, Result};
use crate::io::KeyValues;
use crate::numeric::bessel::ln_bessel_k;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Gh,
    Vg,
    Nig,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Gh => "GH",
            Variant::Vg => "VG",
            Variant::Nig => "NIG",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GH" => Ok(Variant::Gh),
            "VG" => Ok(Variant::Vg),
            "NIG" => Ok(Variant::Nig),
            other => Err(Error::Input(format!("unknown GH variant `{other}` (expected GH, VG or NIG)"))),
        }
    }
}

/// Parameters of a univariate GH law. Immutable once constructed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhParams {
    variant: Variant,
    lambda: f64,
    alpha: f64,
    beta: f64,
    delta: f64,
    mu: f64,
}

impl GhParams {
    pub fn new(variant: Variant, lambda: f64, alpha: f64, beta: f64, delta: f64, mu: f64) -> Result<Self> {
        let all = [lambda, alpha, beta, delta, mu];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite GH parameter in {all:?}")));
        }
        if alpha <= 0.0 {
            return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
        }
        if alpha * alpha - beta * beta <= 0.0 {
            return Err(Error::Parameter(format!("need alpha^2 - beta^2 > 0, got alpha={alpha}, beta={beta}")));
        }
        if delta < 0.0 {
            return Err(Error::Parameter(format!("delta must be non-negative, got {delta}")));
        }
        match variant {
            Variant::Vg => {
                if lambda <= 0.0 || delta != 0.0 {
                    return Err(Error::Parameter(format!("VG needs lambda > 0 and delta = 0, got lambda={lambda}, delta={delta}")));
                }
            }
            Variant::Nig => {
                if lambda != -0.5 || delta <= 0.0 {
                    return Err(Error::Parameter(format!("NIG needs lambda = -1/2 and delta > 0, got lambda={lambda}, delta={delta}")));
                }
            }
            Variant::Gh => {
                if delta == 0.0 && lambda <= 0.0 {
                    return Err(Error::Parameter("GH with delta = 0 needs lambda > 0".into()));
                }
            }
        }
        Ok(GhParams { variant, lambda, alpha, beta, delta, mu })
    }

    pub fn vg(lambda: f64, alpha: f64, beta: f64, mu: f64) -> Result<Self> {
        GhParams::new(Variant::Vg, lambda, alpha, beta, 0.0, mu)
    }

    pub fn nig(alpha: f64, beta: f64, delta: f64, mu: f64) -> Result<Self> {
        GhParams::new(Variant::Nig, -0.5, alpha, beta, delta, mu)
    }

    pub fn gh(lambda: f64, alpha: f64, beta: f64, delta: f64, mu: f64) -> Result<Self> {
        GhParams::new(Variant::Gh, lambda, alpha, beta, delta, mu)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// sqrt(alpha^2 - beta^2).
    pub fn gamma(&self) -> f64 {
        (self.alpha * self.alpha - self.beta * self.beta).sqrt()
    }

    /// True when the mixing law is a Gamma (delta = 0).
    pub fn is_gamma_mixture(&self) -> bool {
        self.delta == 0.0
    }

    /// Same law with a different skewness parameter (the Esscher-tilted law).
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        GhParams::new(self.variant, self.lambda, self.alpha, beta, self.delta, self.mu)
    }

    /// Law of c X + d.
    pub fn affine(&self, c: f64, d: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::Parameter(format!("affine scale must be finite and non-zero, got {c}")));
        }
        let sign = c.signum();
        GhParams::new(
            self.variant,
            self.lambda,
            self.alpha / c.abs(),
            sign * self.beta / c.abs(),
            self.delta * c.abs(),
            c * self.mu + d,
        )
    }

    /// (E[W], Var[W]) of the mixing variable.
    pub fn mixing_moments(&self) -> (f64, f64) {
        let psi = self.alpha * self.alpha - self.beta * self.beta;
        if self.is_gamma_mixture() {
            let rate = 0.5 * psi;
            (self.lambda / rate, self.lambda / (rate * rate))
        } else {
            let chi = self.delta * self.delta;
            let omega = (chi * psi).sqrt();
            let eta = (chi / psi).sqrt();
            let k0 = ln_bessel_k(self.lambda, omega);
            let m1 = eta * (ln_bessel_k(self.lambda + 1.0, omega) - k0).exp();
            let m2 = eta * eta * (ln_bessel_k(self.lambda + 2.0, omega) - k0).exp();
            (m1, m2 - m1 * m1)
        }
    }

    pub fn mean(&self) -> f64 {
        self.mu + self.beta * self.mixing_moments().0
    }

    pub fn variance(&self) -> f64 {
        let (m, v) = self.mixing_moments();
        m + self.beta * self.beta * v
    }

    pub fn to_key_values(&self, prefix: &str) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.push(&format!("{prefix}variant"), self.variant);
        kv.push_f64(&format!("{prefix}lambda"), self.lambda);
        kv.push_f64(&format!("{prefix}alpha"), self.alpha);
        kv.push_f64(&format!("{prefix}beta"), self.beta);
        kv.push_f64(&format!("{prefix}delta"), self.delta);
        kv.push_f64(&format!("{prefix}mu"), self.mu);
        kv
    }

    pub fn from_key_values(kv: &KeyValues, prefix: &str) -> Result<Self> {
        let variant: Variant = kv.require(&format!("{prefix}variant"))?.parse()?;
        GhParams::new(
            variant,
            kv.require_f64(&format!("{prefix}lambda"))?,
            kv.require_f64(&format!("{prefix}alpha"))?,
            kv.require_f64(&format!("{prefix}beta"))?,
            kv.require_f64(&format!("{prefix}delta"))?,
            kv.require_f64(&format!("{prefix}mu"))?,
        )
    }

    pub fn density(&self, x: f64) -> f64 {
        GhDensity::new(self).density(x)
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        GhDensity::new(self).ln_density(x)
    }

    /// Moment generating function E[e^{uX}]; see [`mgf::ln_mgf`].
    pub fn mgf(&self, u: f64) -> Result<f64> {
        mgf::ln_mgf(self, u).map(f64::exp)
    }

    pub fn ln_mgf(&self, u: f64) -> Result<f64> {
        mgf::ln_mgf(self, u)
    }

    /// Open interval of u on which the MGF is finite.
    pub fn mgf_strip(&self) -> (f64, f64) {
        (-self.alpha - self.beta, self.alpha - self.beta)
    }

    /// `n` iid draws, reproducible from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let sampler = GhSampler::new(self);
        let mut out = vec![0.0; n];
        out.par_chunks_mut(crate::rng::SHARD_SIZE).enumerate().for_each(|(shard, chunk)| {
            let mut rng = crate::rng::stream(seed, "gh-sample", shard as u64);
            for v in chunk {
                *v = sampler.draw(&mut rng);
            }
        });
        out
    }
}

impl fmt::Display for GhParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}(lambda={}, alpha={}, beta={}, delta={}, mu={})",
            self.variant, self.lambda, self.alpha, self.beta, self.delta, self.mu
        )
    }
}

/// Draws from a GH law through its normal mean-variance mixture.
#[derive(Debug, Clone)]
pub struct GhSampler {
    mixing: Mixing,
    beta: f64,
    mu: f64,
}

impl GhSampler {
    pub fn new(p: &GhParams) -> Self {
        let psi = p.alpha * p.alpha - p.beta * p.beta;
        GhSampler { mixing: Mixing::new(p.lambda, p.delta * p.delta, psi), beta: p.beta, mu: p.mu }
    }

    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w = self.mixing.draw(rng);
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        self.mu + self.beta * w + w.sqrt() * z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_enforced() {
        assert!(GhParams::gh(1.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(GhParams::gh(1.0, -1.0, 0.0, 1.0, 0.0).is_err());
        assert!(GhParams::vg(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(GhParams::new(Variant::Vg, 1.0, 1.0, 0.0, 0.5, 0.0).is_err());
        assert!(GhParams::new(Variant::Nig, 0.5, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(GhParams::nig(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(GhParams::nig(1.0, 0.5, 1.0, 0.0).is_ok());
    }

    #[test]
    fn key_value_round_trip() {
        let p = GhParams::vg(1.5, 2.0, 0.4, -0.1).unwrap();
        let kv = p.to_key_values("innovation.");
        assert_eq!(GhParams::from_key_values(&kv, "innovation.").unwrap(), p);
    }

    #[test]
    fn vg_moments_closed_form() {
        // VG: E[W] = 2 lambda / psi, Var[W] = 4 lambda / psi^2.
        let p = GhParams::vg(1.5, 2.0, 0.4, 0.1).unwrap();
        let psi = 4.0 - 0.16;
        assert!((p.mean() - (0.1 + 0.4 * 3.0 / psi)).abs() < 1e-14);
        assert!((p.variance() - (3.0 / psi + 0.16 * 6.0 / (psi * psi))).abs() < 1e-14);
    }

    #[test]
    fn nig_moments_closed_form() {
        // NIG: mean = mu + delta beta / gamma, var = delta alpha^2 / gamma^3.
        let p = GhParams::nig(2.0, 0.5, 1.5, 0.2).unwrap();
        let g = p.gamma();
        assert!((p.mean() - (0.2 + 1.5 * 0.5 / g)).abs() < 1e-13);
        assert!((p.variance() - 1.5 * 4.0 / g.powi(3)).abs() < 1e-13);
    }

    #[test]
    fn affine_maps_moments() {
        let p = GhParams::gh(0.7, 1.8, -0.3, 0.9, 0.05).unwrap();
        let q = p.affine(-2.0, 1.0).unwrap();
        assert!((q.mean() - (-2.0 * p.mean() + 1.0)).abs() < 1e-12);
        assert!((q.variance() - 4.0 * p.variance()).abs() < 1e-12);
    }
}
