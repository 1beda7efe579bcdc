//! Bivariate GH laws in the (lambda, chi, psi, mu, Sigma, gamma) form:
//! X = mu + W gamma + sqrt(W) A Z with A A' = Sigma and W ~ GIG(lambda, chi, psi).
//!
//! The scale of W and of Sigma are not separately identified; fitted laws are
//! normalized to det(Sigma) = 1.

use std::f64::consts::PI;

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use super::{GhParams, Mixing, Variant};
use crate::error::{Error, Result};
use crate::numeric::bessel::ln_bessel_k;
use crate::numeric::optim::{minimize_with_restarts, BfgsSettings};
use crate::numeric::stats;

pub type Point = [f64; 2];

const CHUNK: usize = 4096;
const LAMBDA_BOUND: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateGhParams {
    variant: Variant,
    lambda: f64,
    chi: f64,
    psi: f64,
    mu: Point,
    sigma: [[f64; 2]; 2],
    gamma: Point,
}

impl BivariateGhParams {
    pub fn new(variant: Variant, lambda: f64, chi: f64, psi: f64, mu: Point, sigma: [[f64; 2]; 2], gamma: Point) -> Result<Self> {
        let scalars = [lambda, chi, psi, mu[0], mu[1], gamma[0], gamma[1], sigma[0][0], sigma[0][1], sigma[1][0], sigma[1][1]];
        if scalars.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite bivariate GH parameter".into()));
        }
        if sigma[0][1] != sigma[1][0] {
            return Err(Error::Parameter("dispersion matrix must be symmetric".into()));
        }
        let det = sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0];
        if !(sigma[0][0] > 0.0 && det > 0.0) {
            return Err(Error::Parameter(format!("dispersion matrix not positive definite (det {det})")));
        }
        if chi < 0.0 || psi < 0.0 || (chi == 0.0 && psi == 0.0) {
            return Err(Error::Parameter(format!("need chi, psi >= 0 and not both zero, got chi={chi}, psi={psi}")));
        }
        if chi == 0.0 && lambda <= 0.0 {
            return Err(Error::Parameter("chi = 0 needs lambda > 0".into()));
        }
        if psi == 0.0 {
            // The psi -> 0 (Student-type) limit is not supported.
            return Err(Error::Parameter("psi must be positive".into()));
        }
        match variant {
            Variant::Vg if chi != 0.0 => return Err(Error::Parameter("VG needs chi = 0".into())),
            Variant::Nig if lambda != -0.5 || chi <= 0.0 => {
                return Err(Error::Parameter("NIG needs lambda = -1/2 and chi > 0".into()))
            }
            _ => {}
        }
        Ok(BivariateGhParams { variant, lambda, chi, psi, mu, sigma, gamma })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn chi(&self) -> f64 {
        self.chi
    }
    pub fn psi(&self) -> f64 {
        self.psi
    }
    pub fn mu(&self) -> Point {
        self.mu
    }
    pub fn sigma(&self) -> [[f64; 2]; 2] {
        self.sigma
    }
    pub fn gamma(&self) -> Point {
        self.gamma
    }

    fn det(&self) -> f64 {
        self.sigma[0][0] * self.sigma[1][1] - self.sigma[0][1] * self.sigma[1][0]
    }

    /// Same law with Sigma rescaled to unit determinant.
    pub fn normalized(&self) -> Self {
        let c = self.det().sqrt();
        let s = self.sigma;
        BivariateGhParams {
            chi: self.chi * c,
            psi: self.psi / c,
            sigma: [[s[0][0] / c, s[0][1] / c], [s[1][0] / c, s[1][1] / c]],
            gamma: [self.gamma[0] / c, self.gamma[1] / c],
            ..*self
        }
    }

    /// (E[W], Var[W]).
    pub fn mixing_moments(&self) -> (f64, f64) {
        if self.chi == 0.0 {
            let rate = 0.5 * self.psi;
            (self.lambda / rate, self.lambda / (rate * rate))
        } else {
            let omega = (self.chi * self.psi).sqrt();
            let eta = (self.chi / self.psi).sqrt();
            let k0 = ln_bessel_k(self.lambda, omega);
            let m1 = eta * (ln_bessel_k(self.lambda + 1.0, omega) - k0).exp();
            let m2 = eta * eta * (ln_bessel_k(self.lambda + 2.0, omega) - k0).exp();
            (m1, m2 - m1 * m1)
        }
    }

    pub fn mean(&self) -> Point {
        let m = self.mixing_moments().0;
        [self.mu[0] + m * self.gamma[0], self.mu[1] + m * self.gamma[1]]
    }

    /// Cov[X] = E[W] Sigma + Var[W] gamma gamma'.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let (m, v) = self.mixing_moments();
        let mut c = [[0.0; 2]; 2];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = m * self.sigma[i][j] + v * self.gamma[i] * self.gamma[j];
            }
        }
        c
    }

    pub fn correlation(&self) -> f64 {
        let c = self.covariance();
        c[0][1] / (c[0][0] * c[1][1]).sqrt()
    }

    /// Univariate law of coordinate `i` in the (lambda, alpha, beta, delta, mu) form.
    pub fn marginal(&self, i: usize) -> Result<GhParams> {
        let s2 = self.sigma[i][i];
        let g = self.gamma[i];
        let alpha = ((self.psi + g * g / s2) / s2).sqrt();
        let beta = g / s2;
        let delta = (s2 * self.chi).sqrt();
        GhParams::new(self.variant, self.lambda, alpha, beta, delta, self.mu[i])
    }

    pub fn ln_density(&self, x: Point) -> f64 {
        BivariateDensity::new(self).ln_density(x)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<Point> {
        let sampler = BivariateSampler::new(self);
        let mut out = vec![[0.0; 2]; n];
        out.par_chunks_mut(crate::rng::SHARD_SIZE).enumerate().for_each(|(shard, chunk)| {
            let mut rng = crate::rng::stream(seed, "bivariate-gh-sample", shard as u64);
            for v in chunk {
                *v = sampler.draw(&mut rng);
            }
        });
        out
    }
}

struct BivariateDensity {
    lambda: f64,
    chi: f64,
    mu: Point,
    inv: [[f64; 2]; 2],
    /// Sigma^{-1} gamma.
    inv_gamma: Point,
    psi_g: f64,
    ln_norm: f64,
}

impl BivariateDensity {
    fn new(p: &BivariateGhParams) -> Self {
        let det = p.det();
        let s = p.sigma;
        let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
        let inv_gamma = [
            inv[0][0] * p.gamma[0] + inv[0][1] * p.gamma[1],
            inv[1][0] * p.gamma[0] + inv[1][1] * p.gamma[1],
        ];
        let g = p.gamma[0] * inv_gamma[0] + p.gamma[1] * inv_gamma[1];
        let psi_g = p.psi + g;
        let lambda = p.lambda;
        let common = (1.0 - lambda) * psi_g.ln() - (2.0 * PI).ln() - 0.5 * det.ln();
        let ln_norm = if p.chi > 0.0 {
            let omega = (p.chi * p.psi).sqrt();
            -lambda * omega.ln() + lambda * p.psi.ln() - ln_bessel_k(lambda, omega) + common
        } else {
            lambda * p.psi.ln() - ln_gamma(lambda) - (lambda - 1.0) * 2f64.ln() + common
        };
        BivariateDensity { lambda, chi: p.chi, mu: p.mu, inv, inv_gamma, psi_g, ln_norm }
    }

    fn ln_density(&self, x: Point) -> f64 {
        let d = [x[0] - self.mu[0], x[1] - self.mu[1]];
        let q = d[0] * (self.inv[0][0] * d[0] + self.inv[0][1] * d[1]) + d[1] * (self.inv[1][0] * d[0] + self.inv[1][1] * d[1]);
        let skew = d[0] * self.inv_gamma[0] + d[1] * self.inv_gamma[1];
        let z = ((self.chi + q) * self.psi_g).sqrt();
        let nu = self.lambda - 1.0;
        let kernel = if z > 0.0 {
            ln_bessel_k(nu, z) + nu * z.ln()
        } else if nu > 0.0 {
            // K_nu(z) z^nu -> Gamma(nu) 2^{nu-1}.
            ln_gamma(nu) + (nu - 1.0) * 2f64.ln()
        } else {
            f64::INFINITY
        };
        self.ln_norm + kernel + skew
    }
}

struct BivariateSampler {
    mixing: Mixing,
    mu: Point,
    gamma: Point,
    /// Lower Cholesky factor of Sigma.
    l: [f64; 3],
}

impl BivariateSampler {
    fn new(p: &BivariateGhParams) -> Self {
        let l11 = p.sigma[0][0].sqrt();
        let l21 = p.sigma[1][0] / l11;
        let l22 = (p.sigma[1][1] - l21 * l21).sqrt();
        BivariateSampler { mixing: Mixing::new(p.lambda, p.chi, p.psi), mu: p.mu, gamma: p.gamma, l: [l11, l21, l22] }
    }

    fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let w = self.mixing.draw(rng);
        let z1: f64 = rng.sample(rand_distr::StandardNormal);
        let z2: f64 = rng.sample(rand_distr::StandardNormal);
        let s = w.sqrt();
        [
            self.mu[0] + w * self.gamma[0] + s * self.l[0] * z1,
            self.mu[1] + w * self.gamma[1] + s * (self.l[1] * z1 + self.l[2] * z2),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BivariateFit {
    pub params: BivariateGhParams,
    pub log_likelihood: f64,
    pub n: usize,
    pub k: usize,
    pub aic: f64,
    pub bic: f64,
    pub attempts: usize,
}

pub fn log_likelihood(data: &[Point], p: &BivariateGhParams) -> f64 {
    let dens = BivariateDensity::new(p);
    let parts: Vec<f64> = data.par_chunks(CHUNK).map(|c| c.iter().map(|&x| dens.ln_density(x)).sum()).collect();
    parts.iter().sum()
}

/// Parameter vector: [lambda | ln lambda], [ln chi], ln psi, mu (2), ln l11, l21, gamma (2),
/// with Sigma = L L' and l22 = 1 / l11 so that det(Sigma) = 1.
fn decode(variant: Variant, t: &[f64]) -> Option<BivariateGhParams> {
    let (lambda, chi, rest) = match variant {
        Variant::Gh => (t[0], t[1].exp(), &t[2..]),
        Variant::Nig => (-0.5, t[0].exp(), &t[1..]),
        Variant::Vg => (t[0].exp(), 0.0, &t[1..]),
    };
    if lambda.abs() > LAMBDA_BOUND {
        return None;
    }
    let psi = rest[0].exp();
    let mu = [rest[1], rest[2]];
    let l11 = rest[3].exp();
    let l21 = rest[4];
    let l22 = 1.0 / l11;
    let sigma = [[l11 * l11, l11 * l21], [l11 * l21, l21 * l21 + l22 * l22]];
    BivariateGhParams::new(variant, lambda, chi, psi, mu, sigma, [rest[5], rest[6]]).ok()
}

fn encode(p: &BivariateGhParams) -> Vec<f64> {
    let mut t = match p.variant {
        Variant::Gh => vec![p.lambda, p.chi.ln()],
        Variant::Nig => vec![p.chi.ln()],
        Variant::Vg => vec![p.lambda.ln()],
    };
    let l11 = p.sigma[0][0].sqrt();
    t.extend([p.psi.ln(), p.mu[0], p.mu[1], l11.ln(), p.sigma[1][0] / l11, p.gamma[0], p.gamma[1]]);
    t
}

/// Starting law for standardized data with correlation `rho`: symmetric,
/// Sigma proportional to the correlation matrix, E[W] matching its scale.
fn starting_point(variant: Variant, rho: f64) -> BivariateGhParams {
    let c = (1.0 - rho * rho).sqrt();
    let sigma = [[1.0 / c, rho / c], [rho / c, 1.0 / c]];
    let (lambda, chi, psi) = match variant {
        Variant::Gh => {
            // lambda = 1, omega = 1: E[W] = eta K_2(1) / K_1(1).
            let eta = c * (ln_bessel_k(1.0, 1.0) - ln_bessel_k(2.0, 1.0)).exp();
            (1.0, eta, 1.0 / eta)
        }
        Variant::Nig => (-0.5, c, 1.0 / c),
        Variant::Vg => (1.5, 0.0, 3.0 / c),
    };
    BivariateGhParams::new(variant, lambda, chi, psi, [0.0; 2], sigma, [0.0; 2]).expect("valid start")
}

pub fn fit_bivariate(data: &[Point], variant: Variant) -> Result<BivariateFit> {
    fit_bivariate_with(data, variant, BfgsSettings::default(), 5, 0)
}

pub fn fit_bivariate_with(data: &[Point], variant: Variant, bfgs: BfgsSettings, restarts: usize, seed: u64) -> Result<BivariateFit> {
    const MIN: usize = super::fit::MIN_OBSERVATIONS;
    if data.len() < MIN {
        return Err(Error::TooFewObservations { needed: MIN, got: data.len() });
    }
    if data.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(Error::Input("bivariate GH fit: non-finite observation".into()));
    }
    let cols = [data.iter().map(|p| p[0]).collect::<Vec<_>>(), data.iter().map(|p| p[1]).collect::<Vec<_>>()];
    let m = [stats::mean(&cols[0]), stats::mean(&cols[1])];
    let s = [stats::sample_sd(&cols[0]), stats::sample_sd(&cols[1])];
    if !(s[0] > 0.0 && s[1] > 0.0) {
        return Err(Error::Singular("dispersion: a coordinate has zero variance".into()));
    }
    let rho = stats::correlation(&cols[0], &cols[1]);
    if !(1.0 - rho.abs() > 1e-10) {
        return Err(Error::Singular(format!("dispersion: coordinates are collinear (correlation {rho})")));
    }
    let z: Vec<Point> = data.iter().map(|p| [(p[0] - m[0]) / s[0], (p[1] - m[1]) / s[1]]).collect();
    let n = z.len() as f64;
    let objective = |t: &[f64]| match decode(variant, t) {
        Some(p) => -log_likelihood(&z, &p) / n,
        None => f64::INFINITY,
    };
    let starts = vec![encode(&starting_point(variant, rho))];
    let search = minimize_with_restarts(&objective, &starts, bfgs, restarts, 0.2, seed, "bivariate-gh-fit-restart");
    let best = search.best;
    let fitted = decode(variant, &best.x).filter(|_| best.converged && best.value.is_finite());
    let unscale = |p: &BivariateGhParams| -> Result<BivariateGhParams> {
        let sg = p.sigma;
        BivariateGhParams::new(
            p.variant,
            p.lambda,
            p.chi,
            p.psi,
            [m[0] + s[0] * p.mu[0], m[1] + s[1] * p.mu[1]],
            [[s[0] * s[0] * sg[0][0], s[0] * s[1] * sg[0][1]], [s[1] * s[0] * sg[1][0], s[1] * s[1] * sg[1][1]]],
            [s[0] * p.gamma[0], s[1] * p.gamma[1]],
        )
        .map(|q| q.normalized())
    };
    let Some(fitted) = fitted else {
        let best_params = decode(variant, &best.x).and_then(|p| unscale(&p).ok()).map(|p| flat(&p)).unwrap_or_default();
        return Err(Error::FitFailed {
            attempts: search.attempts,
            best_loglik: -best.value * n - n * (s[0] * s[1]).ln(),
            best_params,
            message: format!("bivariate {variant} fit: optimizer did not converge"),
        });
    };
    let params = unscale(&fitted)?;
    let ll = log_likelihood(data, &params);
    let k = encode(&params).len();
    Ok(BivariateFit {
        params,
        log_likelihood: ll,
        n: data.len(),
        k,
        aic: 2.0 * k as f64 - 2.0 * ll,
        bic: k as f64 * n.ln() - 2.0 * ll,
        attempts: search.attempts,
    })
}

/// (lambda, chi, psi, mu1, mu2, s11, s12, s22, gamma1, gamma2).
pub fn flat(p: &BivariateGhParams) -> Vec<f64> {
    vec![p.lambda, p.chi, p.psi, p.mu[0], p.mu[1], p.sigma[0][0], p.sigma[0][1], p.sigma[1][1], p.gamma[0], p.gamma[1]]
}
