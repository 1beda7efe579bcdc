//! Maximum-likelihood fitting of univariate GH, VG and NIG laws.
//!
//! The data are standardized before optimization and the estimate is mapped
//! back through [`GhParams::affine`]. Constraints are enforced by the
//! transforms alpha = sqrt(beta^2 + e^{2g}), delta = e^d and, for VG,
//! lambda = e^l. The first keeps alpha^2 - beta^2 = e^{2g} positive while
//! staying smooth at beta = 0, which the finite-difference gradients need.

use rayon::prelude::*;

use super::{GhDensity, GhParams, Variant};
use crate::error::{Error, Result};
use crate::numeric::optim::{minimize_with_restarts, BfgsSettings};
use crate::numeric::stats;

pub const MIN_OBSERVATIONS: usize = 10;
const LAMBDA_BOUND: f64 = 50.0;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct FitSettings {
    pub bfgs: BfgsSettings,
    /// Perturbed restarts attempted when the best run has not converged.
    pub restarts: usize,
    /// Seed of the restart perturbations.
    pub seed: u64,
    /// Hold mu at this value instead of estimating it.
    pub fixed_mu: Option<f64>,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings { bfgs: BfgsSettings::default(), restarts: 5, seed: 0, fixed_mu: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateFit {
    pub params: GhParams,
    pub log_likelihood: f64,
    pub n: usize,
    /// Number of free parameters.
    pub k: usize,
    pub aic: f64,
    pub bic: f64,
    pub attempts: usize,
}

pub fn fit_univariate(data: &[f64], variant: Variant) -> Result<UnivariateFit> {
    fit_univariate_with(data, variant, &FitSettings::default())
}

/// Sum of log-densities, accumulated in fixed chunks so the result does not
/// depend on thread scheduling.
pub fn log_likelihood(data: &[f64], p: &GhParams) -> f64 {
    let dens = GhDensity::new(p);
    let parts: Vec<f64> = data.par_chunks(CHUNK).map(|c| c.iter().map(|&x| dens.ln_density(x)).sum()).collect();
    parts.iter().sum()
}

fn decode(variant: Variant, t: &[f64], fixed_mu: bool) -> Option<GhParams> {
    let mu = if fixed_mu { 0.0 } else { *t.last()? };
    let p = match variant {
        Variant::Gh => {
            let (lambda, beta) = (t[0], t[1]);
            if lambda.abs() > LAMBDA_BOUND {
                return None;
            }
            GhParams::gh(lambda, beta.hypot(t[2].exp()), beta, t[3].exp(), mu)
        }
        Variant::Nig => GhParams::nig(t[0].hypot(t[1].exp()), t[0], t[2].exp(), mu),
        Variant::Vg => {
            let lambda = t[0].exp();
            if lambda > LAMBDA_BOUND {
                return None;
            }
            GhParams::vg(lambda, t[1].hypot(t[2].exp()), t[1], mu)
        }
    };
    p.ok()
}

fn encode(p: &GhParams, fixed_mu: bool) -> Vec<f64> {
    let gap = p.gamma().ln();
    let mut t = match p.variant() {
        Variant::Gh => vec![p.lambda(), p.beta(), gap, p.delta().ln()],
        Variant::Nig => vec![p.beta(), gap, p.delta().ln()],
        Variant::Vg => vec![p.lambda().ln(), p.beta(), gap],
    };
    if !fixed_mu {
        t.push(p.mu());
    }
    t
}

/// Moment-matched starting laws for standardized data (zero mean, unit variance).
fn starting_points(variant: Variant, excess_kurtosis: f64) -> Vec<GhParams> {
    let k = excess_kurtosis.max(0.2);
    // VG with beta = 0: variance 2 lambda / alpha^2, excess kurtosis 3 / lambda.
    let lambda_vg = (3.0 / k).clamp(0.25, 25.0);
    let vg = GhParams::vg(lambda_vg, (2.0 * lambda_vg).sqrt(), 0.0, 0.0).expect("valid start");
    // NIG with beta = 0: variance delta / alpha, excess kurtosis 3 / (delta alpha).
    let d = (3.0 / k).sqrt();
    let nig = GhParams::nig(d, 0.0, d, 0.0).expect("valid start");
    match variant {
        Variant::Vg => vec![vg, GhParams::vg(1.0, 2f64.sqrt(), 0.0, 0.0).expect("valid start")],
        Variant::Nig => vec![nig, GhParams::nig(1.0, 0.0, 1.0, 0.0).expect("valid start")],
        Variant::Gh => vec![
            GhParams::gh(-0.5, d, 0.0, d, 0.0).expect("valid start"),
            GhParams::gh(lambda_vg, (2.0 * lambda_vg).sqrt(), 0.0, 0.3, 0.0).expect("valid start"),
            GhParams::gh(1.0, 1.5, 0.0, 1.0, 0.0).expect("valid start"),
        ],
    }
}

pub fn fit_univariate_with(data: &[f64], variant: Variant, settings: &FitSettings) -> Result<UnivariateFit> {
    if data.len() < MIN_OBSERVATIONS {
        return Err(Error::TooFewObservations { needed: MIN_OBSERVATIONS, got: data.len() });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("GH fit: non-finite observation".into()));
    }
    let scale = stats::sample_sd(data);
    if !(scale > 0.0) {
        return Err(Error::ZeroVariance { name: "GH fit sample".into() });
    }
    let center = settings.fixed_mu.unwrap_or_else(|| stats::mean(data));
    let z: Vec<f64> = data.iter().map(|x| (x - center) / scale).collect();
    let (_, kurt) = stats::skewness_kurtosis(&z);
    let fixed = settings.fixed_mu.is_some();
    let n = z.len() as f64;

    let objective = |t: &[f64]| match decode(variant, t, fixed) {
        Some(p) => -log_likelihood(&z, &p) / n,
        None => f64::INFINITY,
    };
    let starts: Vec<Vec<f64>> = starting_points(variant, kurt).iter().map(|p| encode(p, fixed)).collect();
    let search = minimize_with_restarts(&objective, &starts, settings.bfgs, settings.restarts, 0.2, settings.seed, "gh-fit-restart");
    let best = search.best;
    let standardized = decode(variant, &best.x, fixed);
    let Some(standardized) = standardized.filter(|_| best.converged && best.value.is_finite()) else {
        let best_params = standardized
            .and_then(|p| p.affine(scale, center).ok())
            .map(|p| vec![p.lambda(), p.alpha(), p.beta(), p.delta(), p.mu()])
            .unwrap_or_default();
        return Err(Error::FitFailed {
            attempts: search.attempts,
            best_loglik: -best.value * n - n * scale.ln(),
            best_params,
            message: format!("{variant} fit: optimizer did not converge"),
        });
    };
    let params = standardized.affine(scale, center)?;
    let ll = log_likelihood(data, &params);
    let k = encode(&params, fixed).len();
    Ok(UnivariateFit {
        params,
        log_likelihood: ll,
        n: data.len(),
        k,
        aic: 2.0 * k as f64 - 2.0 * ll,
        bic: k as f64 * n.ln() - 2.0 * ll,
        attempts: search.attempts,
    })
}
